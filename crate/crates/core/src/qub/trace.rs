use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "t_s,dT_K,power_W,phase";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Heating,
    Cooling,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Heating => "heating",
            Phase::Cooling => "cooling",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heating" => Ok(Phase::Heating),
            "cooling" => Ok(Phase::Cooling),
            other => Err(Error::InvalidArgument(format!("unknown phase {other:?}"))),
        }
    }
}

/// Sampled indoor-outdoor temperature difference during a QUB test.
///
/// The last heating sample is the end of the heating phase and also the
/// origin of the cooling phase.
#[derive(Clone, Debug, PartialEq)]
pub struct QubTrace {
    pub times: Vec<f64>,
    pub delta_t: Vec<f64>,
    pub power: Vec<f64>,
    pub phase: Vec<Phase>,
}

/// Least-squares line over the tail of one phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    /// Slope, K/s.
    pub alpha: f64,
    /// Fitted value at the window start, K.
    pub dt0: f64,
    /// Window start (absolute time), s.
    pub t0: f64,
    /// Window start measured from the phase origin, s.
    pub offset: f64,
    pub r2: f64,
    /// Standard error of the slope, K/s.
    pub slope_stderr: f64,
    pub samples: usize,
}

impl QubTrace {
    pub fn new(times: Vec<f64>, delta_t: Vec<f64>, power: Vec<f64>, phase: Vec<Phase>) -> Result<Self> {
        let trace = Self {
            times,
            delta_t,
            power,
            phase,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.delta_t.len() != n || self.power.len() != n || self.phase.len() != n {
            return Err(Error::InvalidArgument("trace columns differ in length".into()));
        }
        if let Some(k) =
            (0..n).find(|&k| !(self.times[k].is_finite() && self.delta_t[k].is_finite() && self.power[k].is_finite()))
        {
            return Err(Error::InvalidArgument(format!("non-finite value in trace row {k}")));
        }
        if let Some(k) = (1..n).find(|&k| self.times[k] <= self.times[k - 1]) {
            return Err(Error::InvalidArgument(format!(
                "trace times not strictly increasing at row {k}"
            )));
        }
        if self.phase.first() != Some(&Phase::Heating) {
            return Err(Error::InvalidArgument("trace must start with the heating phase".into()));
        }
        let switches = self.phase.windows(2).filter(|w| w[0] != w[1]).count();
        if switches != 1 || self.phase.last() != Some(&Phase::Cooling) {
            return Err(Error::InvalidArgument(
                "trace phase must switch exactly once, from heating to cooling".into(),
            ));
        }
        Ok(())
    }

    /// Index of the last heating sample.
    pub fn switch_index(&self) -> usize {
        self.phase.iter().rposition(|&p| p == Phase::Heating).unwrap_or(0)
    }

    /// Sample range of a phase; cooling starts at the last heating sample.
    pub fn phase_range(&self, phase: Phase) -> std::ops::Range<usize> {
        let s = self.switch_index();
        match phase {
            Phase::Heating => 0..s + 1,
            Phase::Cooling => s..self.len(),
        }
    }

    pub fn heating_power(&self) -> f64 {
        self.power[0]
    }

    pub fn cooling_power(&self) -> f64 {
        self.power[self.switch_index() + 1]
    }

    /// Largest temperature difference of the record.
    pub fn max_delta_t(&self) -> f64 {
        self.delta_t.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!(
                "{:?},{:?},{:?},{}\n",
                self.times[k], self.delta_t[k], self.power[k], self.phase[k]
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => return Err(Error::InvalidArgument(format!("trace header must be {TRACE_HEADER:?}"))),
        }
        let (mut times, mut delta_t, mut power, mut phase) = (vec![], vec![], vec![], vec![]);
        for (line_no, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |what: &str| Error::InvalidArgument(format!("line {}: {what}", line_no + 1));
            if fields.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
            times.push(num(fields[0])?);
            delta_t.push(num(fields[1])?);
            power.push(num(fields[2])?);
            phase.push(
                fields[3]
                    .parse()
                    .map_err(|_| bad(&format!("bad phase {:?}", fields[3])))?,
            );
        }
        Self::new(times, delta_t, power, phase)
    }
}

/// Ordinary least squares `y ≈ a + b (x − x0)`, returning `(b, a, r², se_b)`.
pub(crate) fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "slope window holds {n} samples, at least 3 are needed"
        )));
    }
    let x0 = x[0];
    let nf = n as f64;
    let mx = x.iter().map(|v| v - x0).sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - x0 - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("slope window has no time spread".into()));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - a - b * (xi - x0);
            r * r
        })
        .sum::<f64>();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let se = (ss_res / ((nf - 2.0) * sxx)).sqrt();
    Ok((b, a, r2, se))
}

/// First sample index of the final `fraction` of the samples `range`.
pub(crate) fn window_start(times: &[f64], range: std::ops::Range<usize>, fraction: f64) -> usize {
    let t_start = times[range.start];
    let t_end = times[range.end - 1];
    let from = t_end - fraction * (t_end - t_start);
    let tol = 1e-9 * (t_end - t_start);
    range.clone().find(|&k| times[k] >= from - tol).unwrap_or(range.start)
}

/// Least-squares line over the final `window_fraction` of a phase.
pub fn fit_slope(trace: &QubTrace, phase: Phase, window_fraction: f64) -> Result<SlopeFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "window fraction must be in (0, 1], got {window_fraction}"
        )));
    }
    let range = trace.phase_range(phase);
    let origin = trace.times[range.start];
    let k0 = window_start(&trace.times, range.clone(), window_fraction);
    let x = &trace.times[k0..range.end];
    let y = &trace.delta_t[k0..range.end];
    let (alpha, dt0, r2, slope_stderr) = least_squares(x, y)?;
    Ok(SlopeFit {
        alpha,
        dt0,
        t0: x[0],
        offset: x[0] - origin,
        r2,
        slope_stderr,
        samples: x.len(),
    })
}
