//! Evaluation reports: serializable, byte-stable records of a run.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::padic::{PadicScalar, PrecisionBudget};

/// A `p`-adic value as `p^valuation * unit + O(p^abs_prec)`, with the unit
/// written in the ring basis `{1, w}` as decimal residues.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueRepr {
    pub p: u64,
    pub degree: u8,
    pub zero: bool,
    pub valuation: i64,
    pub unit: [u64; 2],
    pub rel_prec: u32,
    pub abs_prec: i64,
}

impl ValueRepr {
    pub fn from_scalar(x: &PadicScalar) -> Self {
        let ring = x.ring();
        ValueRepr {
            p: ring.p(),
            degree: ring.degree(),
            zero: x.is_zero(),
            valuation: x.valuation(),
            unit: if x.is_zero() { [0, 0] } else { x.unit().coords() },
            rel_prec: x.rel_prec(),
            abs_prec: x.abs_prec(),
        }
    }

    pub fn render(&self) -> String {
        if self.zero {
            return format!("0 (to precision {}^{})", self.p, self.abs_prec);
        }
        let unit = if self.degree == 1 || self.unit[1] == 0 {
            self.unit[0].to_string()
        } else {
            format!("{} + {}*w", self.unit[0], self.unit[1])
        };
        format!("{}^{} * ({}) + O({}^{})", self.p, self.valuation, unit, self.p, self.abs_prec)
    }
}

/// Agreement of one component of an identity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub term: String,
    pub valuation: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    /// Valuation of the difference; equals `attainable` on exact agreement.
    pub agreement: u32,
    pub attainable: u32,
    pub required: u32,
    pub passed: bool,
    pub rows: Vec<AgreementRow>,
}

impl IdentityCheck {
    pub fn exact(&self) -> bool {
        self.agreement >= self.attainable
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerReport {
    pub e_fstar: ValueRepr,
    pub e_p: ValueRepr,
    pub e_0p: Option<ValueRepr>,
    pub exceptional_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub software: String,
    pub command: String,
    pub config: serde_json::Value,
    pub value: Option<ValueRepr>,
    pub effective_precision: i64,
    pub budget: PrecisionBudget,
    pub euler: Option<EulerReport>,
    pub checks: Vec<IdentityCheck>,
    pub notes: Vec<String>,
}

impl EvaluationReport {
    pub fn new(command: &str, config: serde_json::Value, start: u32) -> Self {
        EvaluationReport {
            software: format!("hpl {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config,
            value: None,
            effective_precision: start as i64,
            budget: PrecisionBudget::new(start),
            euler: None,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} ({})", self.command, self.software);
        if let Some(v) = &self.value {
            let _ = writeln!(s, "value: {}", v.render());
        }
        let _ = writeln!(s, "effective precision: {}", self.effective_precision);
        let _ = writeln!(s, "precision budget: start {}, lost {}", self.budget.start, self.budget.total_loss());
        for l in &self.budget.losses {
            let _ = writeln!(s, "  - {}: {}", l.stage, l.digits);
        }
        if let Some(e) = &self.euler {
            let _ = writeln!(s, "E(f*) = {}", e.e_fstar.render());
            let _ = writeln!(s, "E_p = {}", e.e_p.render());
            if let Some(e0) = &e.e_0p {
                let _ = writeln!(s, "E_0p = {}", e0.render());
            }
        }
        for c in &self.checks {
            let status = if c.passed { "ok" } else { "FAILED" };
            let agree = if c.exact() { format!("exact to {}", c.attainable) } else { c.agreement.to_string() };
            let _ = writeln!(s, "{}: {} vs {}: agreement {} (required {}) {}", c.name, c.lhs, c.rhs, agree, c.required, status);
            for r in &c.rows {
                let _ = writeln!(s, "    {}: {}", r.term, r.valuation);
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicRing;

    #[test]
    fn renders_zero_and_units() {
        let r = PadicRing::new(7, 12, 1).unwrap();
        let z = ValueRepr::from_scalar(&PadicScalar::zero(r, 9));
        assert_eq!(z.render(), "0 (to precision 7^9)");
        let x = ValueRepr::from_scalar(&PadicScalar::from_int(r, 7 * 3));
        assert_eq!(x.render(), "7^1 * (3) + O(7^13)");
    }
}
