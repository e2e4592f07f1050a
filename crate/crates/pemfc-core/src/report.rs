//! Flat JSON summary of a solve: convergence, conservation balances and the
//! per-iteration estimate outcome, with a fixed key order so files diff
//! cleanly across runs.

use crate::picard::{Balances, IterationTrace};

pub struct RunSummary {
    pub converged: bool,
    pub iterations: usize,
    /// largest relative slot update of the last iteration
    pub final_update: f64,
    pub newton_steps_total: usize,
    pub anode_current: f64,
    pub cathode_current: f64,
    /// normalization of the conservation identity, |I_a| + j_L |Gamma_c|
    pub current_scale: f64,
    pub balances: Balances,
    /// estimate evaluations (0 when the checks were off)
    pub estimates_checked: usize,
    pub estimates_failed: usize,
    /// wellposedness warning echoed from the pre-solve check
    pub regime_warning: Option<String>,
}

impl RunSummary {
    pub fn from_trace(
        trace: &IterationTrace,
        balances: Balances,
        anode_current: f64,
        cathode_current: f64,
        current_scale: f64,
        regime_warning: Option<String>,
    ) -> RunSummary {
        let last = trace.rows.last();
        let flow_failed = trace.flow_estimates.iter().filter(|e| !e.pass).count();
        let tec_failed = trace
            .tec_estimates
            .iter()
            .filter(|e| !matches!(e, Some(t) if t.pass))
            .count();
        RunSummary {
            converged: trace.converged,
            iterations: trace.rows.len(),
            final_update: last.map(IterationTrace::max_update).unwrap_or(0.0),
            newton_steps_total: trace.rows.iter().map(|r| r.newton_steps).sum(),
            anode_current,
            cathode_current,
            current_scale,
            balances,
            estimates_checked: trace.flow_estimates.len() + trace.tec_estimates.len(),
            estimates_failed: flow_failed + tec_failed,
            regime_warning,
        }
    }

    /// |I_a - I_c| against the conservation scale. Normalizing by the
    /// limiting-current capacity of the cathode interface keeps the ratio
    /// meaningful when the net currents nearly cancel.
    pub fn current_imbalance_rel(&self) -> f64 {
        if self.current_scale == 0.0 {
            return 0.0;
        }
        self.balances.current_imbalance.abs() / self.current_scale
    }

    pub fn to_json(&self) -> String {
        let num = |v: f64| {
            if v.is_finite() {
                format!("{v:e}")
            } else {
                "null".to_string()
            }
        };
        let warning = match &self.regime_warning {
            Some(w) => format!("\"{}\"", w.replace('\\', "\\\\").replace('"', "\\\"")),
            None => "null".to_string(),
        };
        let entries = [
            ("converged", self.converged.to_string()),
            ("iterations", self.iterations.to_string()),
            ("final_update", num(self.final_update)),
            ("newton_steps", self.newton_steps_total.to_string()),
            ("current.anode", num(self.anode_current)),
            ("current.cathode", num(self.cathode_current)),
            ("balance.darcy_net_flux", num(self.balances.darcy_net_flux)),
            (
                "balance.current_imbalance",
                num(self.balances.current_imbalance),
            ),
            (
                "balance.current_imbalance_rel",
                num(self.current_imbalance_rel()),
            ),
            ("balance.heat", num(self.balances.heat_balance)),
            ("estimates.checked", self.estimates_checked.to_string()),
            ("estimates.failed", self.estimates_failed.to_string()),
            ("regime_warning", warning),
        ];
        let mut out = String::from("{\n");
        for (i, (k, v)) in entries.iter().enumerate() {
            let comma = if i + 1 < entries.len() { "," } else { "" };
            out.push_str(&format!("  \"{k}\": {v}{comma}\n"));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(warning: Option<String>) -> RunSummary {
        RunSummary {
            converged: true,
            iterations: 7,
            final_update: 3.0e-9,
            newton_steps_total: 21,
            anode_current: 2.0e-3,
            cathode_current: 2.0e-3 - 4.0e-13,
            current_scale: 2.0e-3,
            balances: Balances {
                darcy_net_flux: 1.0e-15,
                current_imbalance: 4.0e-13,
                heat_balance: -2.0e-12,
            },
            estimates_checked: 14,
            estimates_failed: 0,
            regime_warning: warning,
        }
    }

    #[test]
    fn json_is_valid_and_carries_the_fixed_keys() {
        let s = summary(None).to_json();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let obj = v.as_object().unwrap();
        for k in [
            "converged",
            "iterations",
            "final_update",
            "newton_steps",
            "current.anode",
            "current.cathode",
            "balance.darcy_net_flux",
            "balance.current_imbalance",
            "balance.current_imbalance_rel",
            "balance.heat",
            "estimates.checked",
            "estimates.failed",
            "regime_warning",
        ] {
            assert!(obj.contains_key(k), "missing {k}");
        }
        assert_eq!(obj.len(), 13);
        assert_eq!(obj["converged"], serde_json::json!(true));
        assert!(obj["regime_warning"].is_null());
    }

    #[test]
    fn warnings_are_escaped_into_valid_json() {
        let s = summary(Some("margin \"a1\" is 0 \\ below floor".into())).to_json();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(
            v["regime_warning"].as_str().unwrap(),
            "margin \"a1\" is 0 \\ below floor"
        );
    }

    #[test]
    fn relative_imbalance_handles_the_zero_scale_case() {
        let mut s = summary(None);
        assert!((s.current_imbalance_rel() - 2.0e-10).abs() < 1e-15);
        s.current_scale = 0.0;
        assert_eq!(s.current_imbalance_rel(), 0.0);
    }
}
