//! Report assembly: everything the CLI emits is exact (integers and
//! rationals rendered as strings); JSON documents carry the schema tag
//! `fibercone/1`.

use fibercone::cones::OpenCone;
use fibercone::cover::ConfinementReport;
use fibercone::Rat;
use serde_json::{json, Value};

pub const SCHEMA: &str = "fibercone/1";

pub fn rat_str(r: &Rat) -> String {
    if r.denom() == &fibercone::Int::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// H-representation of an open cone.
pub fn cone_json(c: &OpenCone) -> Value {
    json!({
        "ambient_dim": c.ambient_dim,
        "normals": c.normals.iter().collect::<Vec<_>>(),
        "semantics": "x satisfying n . x > 0 for every normal n",
    })
}

pub fn cone_text(c: &OpenCone) -> String {
    if c.normals.is_empty() {
        return format!("whole space (dim {})", c.ambient_dim);
    }
    let rows: Vec<String> = c.normals.iter().map(|n| format!("{n:?} . x > 0")).collect();
    rows.join(", ")
}

pub fn confinement_json(rep: &ConfinementReport) -> Value {
    json!({
        "t_max": rep.t_max,
        "excess": rep.excess.iter().map(rat_str).collect::<Vec<_>>(),
        "c": rat_str(&rep.c),
    })
}

/// One pass/fail verdict line of the verification suite.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn json(&self) -> Value {
        json!({ "criterion": self.name, "pass": self.pass, "detail": self.detail })
    }

    pub fn text(&self) -> String {
        format!("[{}] {} - {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}
