use serde::{Deserialize, Serialize};

/// One row per iteration; row 0 describes the starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub phi: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub theta: f64,
    pub backtracks: u32,
    /// Cumulative forward applications of the reduced operator.
    pub fwd: u64,
    /// Cumulative adjoint applications of the reduced operator.
    pub adj: u64,
    /// Cumulative generalized projections onto the dual.
    pub prox: u64,
    /// Relative error of the monitored iterate against a reference.
    pub err: Option<f64>,
    /// Cumulative primal minimizations (SVT calls for matrix models).
    pub primal_prox: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// Iterations at which a restart reset `theta` and `zbar`.
    pub restarts: Vec<usize>,
}

pub const TRACE_HEADER: &str = "iter,phi,L,theta,backtracks,fwd,adj,prox,err";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl Trace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let err = r.err.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.iter,
                fmt_f64(r.phi),
                fmt_f64(r.lipschitz),
                fmt_f64(r.theta),
                r.backtracks,
                r.fwd,
                r.adj,
                r.prox,
                err
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": "cfm/1",
            "rows": self.rows,
            "restarts": self.restarts,
        })
    }
}
