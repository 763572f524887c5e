//! Dormand–Prince 5(4) integration of autonomous planar systems with dense
//! output and event location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_steps: usize,
    pub max_time: f64,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-10,
            max_steps: 500_000,
            max_time: 1e4,
        }
    }
}

/// Residual below which an event is considered located.
pub const EVENT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    /// `g` goes from negative to nonnegative.
    Rising,
    /// `g` goes from positive to nonpositive.
    Falling,
    Either,
}

/// Zero set of `g`, crossed in the given direction. `accept` can veto a
/// located crossing, in which case integration continues.
pub struct Event<'a> {
    pub g: &'a dyn Fn(&State) -> f64,
    pub crossing: Crossing,
    pub accept: Option<&'a dyn Fn(&State) -> bool>,
}

impl<'a> Event<'a> {
    pub fn new(g: &'a dyn Fn(&State) -> f64, crossing: Crossing) -> Self {
        Self {
            g,
            crossing,
            accept: None,
        }
    }

    fn crossed(&self, g0: f64, g1: f64) -> bool {
        let rising = g0 < 0.0 && g1 >= 0.0;
        let falling = g0 > 0.0 && g1 <= 0.0;
        match self.crossing {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Either => rising || falling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub index: usize,
    pub t: f64,
    pub y: State,
    pub residual: f64,
}

/// Dense-output polynomial of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [State; 5],
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> State {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            *o = r[0][k] + th * (r[1][k] + th1 * (r[2][k] + th * (r[3][k] + th1 * r[4][k])));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub dense: Vec<DenseStep>,
    pub event: Option<EventRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        self.event.map_or(*self.states.last().expect("nonempty"), |e| e.y)
    }

    pub fn final_time(&self) -> f64 {
        self.event.map_or(*self.times.last().expect("nonempty"), |e| e.t)
    }

    /// Dense-output state at `t` inside the integrated span.
    pub fn interpolate(&self, t: f64) -> Option<State> {
        let i = self.dense.partition_point(|d| d.t0 + d.h < t);
        let step = self.dense.get(i)?;
        (t >= step.t0).then(|| step.eval(t))
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn comb(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

fn finite(y: &State) -> bool {
    y[0].is_finite() && y[1].is_finite()
}

struct Stepper<'a> {
    f: &'a dyn Fn(&State) -> State,
    tol: &'a OdeTolerance,
}

struct Attempt {
    y1: State,
    k7: State,
    err: f64,
    rcont: [State; 5],
}

impl Stepper<'_> {
    fn scale(&self, a: f64, b: f64) -> f64 {
        self.tol.abs + self.tol.rel * a.abs().max(b.abs())
    }

    fn attempt(&self, y: &State, k1: &State, h: f64) -> Attempt {
        let f = self.f;
        let k2 = f(&comb(y, &[(A21, k1)], h));
        let k3 = f(&comb(y, &[(A31, k1), (A32, &k2)], h));
        let k4 = f(&comb(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(&comb(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(&comb(
            y,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ));
        let y1 = comb(
            y,
            &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            h,
        );
        let k7 = f(&y1);
        let mut err = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let r = e / self.scale(y[i], y1[i]);
            err += r * r;
        }
        let err = (err / 2.0).sqrt();
        let mut rcont = [[0.0; 2]; 5];
        for i in 0..2 {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            rcont[0][i] = y[i];
            rcont[1][i] = ydiff;
            rcont[2][i] = bspl;
            rcont[3][i] = ydiff - h * k7[i] - bspl;
            rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Attempt { y1, k7, err, rcont }
    }

    fn initial_step(&self, y: &State, k1: &State) -> f64 {
        let f = self.f;
        let norm = |v: &State| {
            ((0..2)
                .map(|i| (v[i] / self.scale(y[i], y[i])).powi(2))
                .sum::<f64>()
                / 2.0)
                .sqrt()
        };
        let (d0, d1) = (norm(y), norm(k1));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = comb(y, &[(1.0, k1)], h0);
        let k2 = f(&y1);
        let d2 = norm(&[k2[0] - k1[0], k2[1] - k1[1]]) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }
}

/// Illinois-modified regula falsi for `g ∘ dense` on `[a, b]` with a sign change.
fn locate(step: &DenseStep, g: &dyn Fn(&State) -> f64, mut a: f64, mut b: f64) -> (f64, State, f64) {
    let mut ga = g(&step.eval(a));
    let mut gb = g(&step.eval(b));
    let mut side = 0i8;
    let mut best = (b, step.eval(b), gb);
    for _ in 0..200 {
        let t = if ga != gb { b - gb * (b - a) / (gb - ga) } else { 0.5 * (a + b) };
        let t = if t > a.min(b) && t < a.max(b) { t } else { 0.5 * (a + b) };
        let y = step.eval(t);
        let gt = g(&y);
        if gt.abs() < best.2.abs() {
            best = (t, y, gt);
        }
        if gt.abs() <= EVENT_RESIDUAL || (b - a).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            return (t, y, gt);
        }
        if (gt > 0.0) == (gb > 0.0) {
            b = t;
            gb = gt;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = t;
            ga = gt;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
    }
    best
}

/// Integrate `ẏ = f(y)` from `y0` at `t = 0` until the first accepted event,
/// `tol.max_time`, or `guard` returning false (an escape).
///
/// An event whose function already vanishes at `y0` (within
/// [`EVENT_RESIDUAL`]) and is not vetoed ends the trajectory immediately.
pub fn integrate(
    f: &dyn Fn(&State) -> State,
    y0: State,
    events: &[Event],
    guard: Option<&dyn Fn(&State) -> bool>,
    tol: &OdeTolerance,
) -> Result<Trajectory> {
    if !finite(&y0) {
        return Err(Error::Integration(format!("non-finite initial state {y0:?}")));
    }
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y0],
        dense: Vec::new(),
        event: None,
    };
    for (index, ev) in events.iter().enumerate() {
        let g0 = (ev.g)(&y0);
        if g0.abs() <= EVENT_RESIDUAL && ev.accept.map_or(true, |a| a(&y0)) && ev.crossing == Crossing::Either {
            traj.event = Some(EventRecord {
                index,
                t: 0.0,
                y: y0,
                residual: g0,
            });
            return Ok(traj);
        }
    }
    let stepper = Stepper { f, tol };
    let mut y = y0;
    let mut t = 0.0;
    let mut k1 = f(&y);
    if !finite(&k1) {
        return Err(Error::Integration(format!("field not finite at {y:?}")));
    }
    let mut h = stepper.initial_step(&y, &k1);
    let mut gvals: Vec<f64> = events.iter().map(|e| (e.g)(&y)).collect();
    let mut rejected_last = false;
    for _ in 0..tol.max_steps {
        if t >= tol.max_time {
            break;
        }
        h = h.min(tol.max_time - t);
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration(format!(
                "step size underflow at t = {t}, y = ({}, {})",
                y[0], y[1]
            )));
        }
        let att = stepper.attempt(&y, &k1, h);
        if !att.err.is_finite() || !finite(&att.y1) {
            h *= 0.2;
            rejected_last = true;
            continue;
        }
        if att.err > 1.0 {
            h *= (0.9 * att.err.powf(-0.2)).max(0.2);
            rejected_last = true;
            continue;
        }
        let step = DenseStep {
            t0: t,
            h,
            rcont: att.rcont,
        };
        let t1 = t + h;
        let new_g: Vec<f64> = events.iter().map(|e| (e.g)(&att.y1)).collect();
        let mut hit: Option<EventRecord> = None;
        for (index, ev) in events.iter().enumerate() {
            if !ev.crossed(gvals[index], new_g[index]) {
                continue;
            }
            let (te, ye, res) = locate(&step, ev.g, t, t1);
            if ev.accept.map_or(true, |a| a(&ye)) && hit.map_or(true, |h| te < h.t) {
                hit = Some(EventRecord {
                    index,
                    t: te,
                    y: ye,
                    residual: res,
                });
            }
        }
        traj.dense.push(step);
        if let Some(e) = hit {
            traj.times.push(e.t);
            traj.states.push(e.y);
            traj.event = Some(e);
            return Ok(traj);
        }
        t = t1;
        y = att.y1;
        k1 = att.k7;
        gvals = new_g;
        traj.times.push(t);
        traj.states.push(y);
        if let Some(guard) = guard {
            if !guard(&y) {
                return Err(Error::Escape(format!(
                    "state ({}, {}) at t = {t}",
                    y[0], y[1]
                )));
            }
        }
        let grow = (0.9 * att.err.max(1e-10).powf(-0.2)).min(if rejected_last { 1.0 } else { 10.0 });
        h *= grow.max(0.2);
        rejected_last = false;
    }
    if events.is_empty() && t >= tol.max_time {
        return Ok(traj);
    }
    if t >= tol.max_time {
        return Err(Error::MaxTime(tol.max_time));
    }
    Err(Error::Integration(format!(
        "step budget of {} exhausted at t = {t}",
        tol.max_steps
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let f = |y: &State| [-y[0], 2.0 * y[1]];
        let tol = OdeTolerance {
            max_time: 3.0,
            ..Default::default()
        };
        let tr = integrate(&f, [1.0, 1.0], &[], None, &tol).unwrap();
        let end = tr.final_state();
        assert!((tr.final_time() - 3.0).abs() < 1e-15);
        assert!((end[0] / (-3f64).exp() - 1.0).abs() < 1e-9);
        assert!((end[1] / 6f64.exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dense_output_matches_solution() {
        let f = |y: &State| [y[1], -y[0]];
        let tol = OdeTolerance {
            max_time: 6.0,
            ..Default::default()
        };
        let tr = integrate(&f, [0.0, 1.0], &[], None, &tol).unwrap();
        for k in 1..60 {
            let t = 0.1 * k as f64;
            let y = tr.interpolate(t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-8, "{t}");
        }
    }

    #[test]
    fn event_is_polished() {
        let f = |y: &State| [1.0, y[1]];
        let g = |y: &State| y[1] - 2.0;
        let tr = integrate(&f, [0.0, 1.0], &[Event::new(&g, Crossing::Rising)], None, &Default::default()).unwrap();
        let e = tr.event.unwrap();
        assert!(e.residual.abs() <= EVENT_RESIDUAL);
        assert!((e.t - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn vetoed_crossing_is_skipped() {
        let f = |y: &State| [-y[1], y[0]];
        let g = |y: &State| y[1];
        let right = |y: &State| y[0] > 0.0;
        let ev = Event {
            g: &g,
            crossing: Crossing::Rising,
            accept: Some(&right),
        };
        let tr = integrate(&f, [1.0, 0.0], &[ev], None, &Default::default()).unwrap();
        let e = tr.event.unwrap();
        assert!((e.t - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn guard_reports_escape() {
        let f = |y: &State| [y[0] * y[0], 0.0];
        let guard = |y: &State| y[0] < 10.0;
        let r = integrate(&f, [1.0, 0.0], &[], Some(&guard), &Default::default());
        assert!(matches!(r, Err(Error::Escape(_))));
    }
}
