//! Words in a free group on generators `1..=rank`.
//!
//! A letter `+k` is the k-th generator, `-k` its inverse; `0` is not a
//! letter. Words are plain `Vec<i32>` wrapped in helpers; reduction is
//! always explicit.

/// Signed generator index. `+k` / `-k` for generator `k >= 1`.
pub type Letter = i32;

/// Freely reduce a word (cancel adjacent `x x^-1` pairs).
pub fn reduce(word: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(word.len());
    for &l in word {
        debug_assert!(l != 0);
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Inverse word (reverse, negate letters).
pub fn inverse(word: &[Letter]) -> Vec<Letter> {
    word.iter().rev().map(|&l| -l).collect()
}

pub fn concat(a: &[Letter], b: &[Letter]) -> Vec<Letter> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// Cyclically reduce an already freely reduced word.
pub fn cyclic_reduce(word: &[Letter]) -> Vec<Letter> {
    let mut w = word.to_vec();
    while w.len() >= 2 && *w.first().unwrap() == -*w.last().unwrap() {
        w.remove(0);
        w.pop();
    }
    w
}

/// True iff the reduced word is trivial.
pub fn is_trivial(word: &[Letter]) -> bool {
    reduce(word).is_empty()
}

/// True iff `a` and `b` are conjugate, decided by comparing cyclic words.
pub fn conjugate(a: &[Letter], b: &[Letter]) -> bool {
    let a = cyclic_reduce(&reduce(a));
    let b = cyclic_reduce(&reduce(b));
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..a.len()).any(|k| (0..a.len()).all(|i| a[(i + k) % a.len()] == b[i]))
}

/// Apply a substitution `x_k -> images[k-1]` to a word. Inverse letters map
/// to the inverse image. No reduction is performed.
pub fn substitute(word: &[Letter], images: &[Vec<Letter>]) -> Vec<Letter> {
    let mut out = Vec::new();
    for &l in word {
        let img = &images[(l.unsigned_abs() as usize) - 1];
        if l > 0 {
            out.extend_from_slice(img);
        } else {
            out.extend(inverse(img));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_cancels_pairs() {
        assert_eq!(reduce(&[1, -1]), Vec::<Letter>::new());
        assert_eq!(reduce(&[1, 2, -2, -1, 3]), vec![3]);
        assert_eq!(reduce(&[1, 2, -1]), vec![1, 2, -1]);
    }

    #[test]
    fn inverse_roundtrip() {
        let w = vec![1, -2, 3];
        assert_eq!(reduce(&concat(&w, &inverse(&w))), Vec::<Letter>::new());
    }

    #[test]
    fn conjugacy_detects_rotation() {
        assert!(conjugate(&[1, 2], &[2, 1]));
        assert!(conjugate(&[2, 2, 1, -2, -2], &[1])); // w a w^-1 ~ a
        assert!(!conjugate(&[1, 2], &[1, -2]));
    }
}
