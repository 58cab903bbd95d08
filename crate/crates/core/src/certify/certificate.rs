use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

/// Default tolerance on `max_violation` for a passing certificate.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    ProxRegFunction,
    ProxRegSet,
    ProductSet,
    Perturbed,
    Monotonicity,
    WLipschitz,
    ChartRegularity,
    SelectionInterior,
    BoundaryApproach,
    SequenceRegularity,
    BallInclusion,
    QuadraticLowerBound,
    ProximalSubgradient,
    Sandwich,
    InnerSemicontinuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// Named vectors describing one offending sample.
pub type Witness = BTreeMap<String, Vec<f64>>;

/// Sampling evidence for a universally quantified inequality.
///
/// `max_violation` is the largest `bound - actual` seen; the certificate passes
/// iff it is at most `tolerance`. A pass only means no violation was found.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub params: BTreeMap<String, f64>,
    pub max_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub verdict: Verdict,
    pub samples_checked: usize,
    pub samples_skipped: usize,
    pub note: String,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// Running reduction over samples: max violation, first offending sample.
#[derive(Debug, Clone)]
pub struct Tally {
    kind: CertKind,
    tol: f64,
    params: BTreeMap<String, f64>,
    max_violation: f64,
    witness: Option<Witness>,
    checked: usize,
    skipped: usize,
}

impl Tally {
    pub fn new(kind: CertKind, tol: f64) -> Self {
        Self {
            kind,
            tol,
            params: BTreeMap::new(),
            max_violation: f64::NEG_INFINITY,
            witness: None,
            checked: 0,
            skipped: 0,
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn set_param(&mut self, key: &str, value: f64) {
        self.params.insert(key.to_string(), value);
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Records one sample; `witness` is only built when the sample is the
    /// first one to exceed the tolerance.
    pub fn record<F: FnOnce() -> Witness>(&mut self, violation: f64, witness: F) {
        self.checked += 1;
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        if violation > self.max_violation {
            self.max_violation = violation;
        }
        if violation > self.tol && self.witness.is_none() {
            let mut w = witness();
            w.insert("violation".into(), vec![violation]);
            self.witness = Some(w);
        }
    }

    pub fn max_violation(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.max_violation
        }
    }

    pub fn finish(self) -> Certificate {
        let max_violation = self.max_violation();
        let verdict = if max_violation <= self.tol { Verdict::Pass } else { Verdict::Fail };
        let note = match verdict {
            Verdict::Pass => format!("no violation found at {} samples", self.checked),
            Verdict::Fail => format!("violation {max_violation:e} exceeds tolerance {:e}", self.tol),
        };
        Certificate {
            kind: self.kind,
            params: self.params,
            max_violation,
            tolerance: self.tol,
            witness: self.witness,
            verdict,
            samples_checked: self.checked,
            samples_skipped: self.skipped,
            note,
        }
    }
}

/// Builds a witness map from `(name, vector)` pairs.
pub fn witness(entries: &[(&str, &DVector<f64>)]) -> Witness {
    entries.iter().map(|(k, v)| (k.to_string(), v.as_slice().to_vec())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_offender_is_kept() {
        let mut t = Tally::new(CertKind::BallInclusion, 1e-9);
        t.record(-1.0, Witness::new);
        t.record(0.5, || witness(&[("a", &DVector::from_vec(vec![1.0]))]));
        t.record(2.0, || witness(&[("a", &DVector::from_vec(vec![2.0]))]));
        let c = t.finish();
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.max_violation, 2.0);
        assert_eq!(c.witness.unwrap()["a"], vec![1.0]);
        assert_eq!(c.samples_checked, 3);
    }

    #[test]
    fn empty_tally_passes() {
        let c = Tally::new(CertKind::WLipschitz, 1e-9).finish();
        assert!(c.passed());
        assert_eq!(c.max_violation, 0.0);
        assert!(c.note.contains("0 samples"));
    }
}
