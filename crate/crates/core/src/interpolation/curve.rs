//! Sampled curves of measures with their velocity fields, and the flow maps
//! `T_{t→s}` solving `d/ds T_{t→s}(x) = v_s(T_{t→s}(x))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::{GridMeasure, MeasureSpec, QuantileFunction, VelocityField, DEFAULT_QUANTILE_POINTS};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    HeatFlow,
    Translation,
    Dilation,
    Custom,
}

/// Curve `t ↦ μ_t` known at increasing sample times, with a velocity field
/// per sample.
#[derive(Clone, Debug)]
pub struct MeasureCurve<S> {
    kind: CurveKind,
    times: Vec<S>,
    measures: Vec<GridMeasure<S>>,
    velocities: Vec<VelocityField<S>>,
}

impl<S: Scalar> MeasureCurve<S> {
    pub fn new(
        kind: CurveKind,
        times: Vec<S>,
        measures: Vec<GridMeasure<S>>,
        velocities: Vec<VelocityField<S>>,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != measures.len() || times.len() != velocities.len() {
            return Err(Error::InvalidArgument("curve needs one measure and one velocity per sample time".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample times must be finite and strictly increasing".into()));
        }
        let grid = *measures[0].grid();
        for (m, v) in measures.iter().zip(&velocities) {
            grid.ensure_same(m.grid())?;
            grid.ensure_same(v.grid())?;
        }
        Ok(Self { kind, times, measures, velocities })
    }

    /// `N(m₀ + c t, σ²)` moving at constant speed `c`.
    pub fn translation(grid: Grid<S>, mean: S, variance: S, speed: S, times: &[S]) -> Result<Self> {
        grid.ensure_one_dimensional("translation curves")?;
        let measures = times
            .iter()
            .map(|&t| GridMeasure::from_spec(&MeasureSpec::gaussian_1d(mean + speed * t, variance), grid))
            .collect::<Result<Vec<_>>>()?;
        let velocities = times.iter().map(|_| VelocityField::from_fn(grid, |_| vec![speed])).collect();
        Self::new(CurveKind::Translation, times.to_vec(), measures, velocities)
    }

    /// `N(m, σ² e^{2λt})`, the image of `N(m, σ²)` under `x ↦ m + e^{λt}(x - m)`,
    /// with velocity `λ (x - m)`.
    pub fn dilation(grid: Grid<S>, mean: S, variance: S, rate: S, times: &[S]) -> Result<Self> {
        grid.ensure_one_dimensional("dilation curves")?;
        let two = S::lit(2.0);
        let measures = times
            .iter()
            .map(|&t| GridMeasure::from_spec(&MeasureSpec::gaussian_1d(mean, variance * (two * rate * t).exp()), grid))
            .collect::<Result<Vec<_>>>()?;
        let velocities = times.iter().map(|_| VelocityField::from_fn(grid, |x| vec![rate * (x[0] - mean)])).collect();
        Self::new(CurveKind::Dilation, times.to_vec(), measures, velocities)
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid<S> {
        self.measures[0].grid()
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn measure(&self, k: usize) -> &GridMeasure<S> {
        &self.measures[k]
    }

    pub fn velocity(&self, k: usize) -> &VelocityField<S> {
        &self.velocities[k]
    }

    /// Weak continuity-equation residual at every sample,
    /// `max_φ |d/dt ∫φ dμ_t - ∫⟨∇φ, v_t⟩ dμ_t|`, over the test functions
    /// `x_a`, `|x|²/2` and `exp(-|x|²/4)`. The time derivative is a central
    /// difference (one-sided at the ends). A single-sample curve has no
    /// residual.
    pub fn continuity_residuals(&self) -> Vec<S> {
        let n = self.len();
        if n < 2 {
            return Vec::new();
        }
        let grid = *self.grid();
        let d = grid.dimension();
        let quarter = S::lit(0.25);
        let half = S::lit(0.5);
        let mut tests: Vec<(Vec<S>, Vec<Vec<S>>)> = Vec::new();
        for a in 0..d {
            let values = (0..grid.len()).map(|k| grid.coordinate(k, a)).collect();
            let grads = (0..d).map(|b| vec![if a == b { S::one() } else { S::zero() }; grid.len()]).collect();
            tests.push((values, grads));
        }
        let r2: Vec<S> = (0..grid.len()).map(|k| grid.norm_squared(k)).collect();
        tests.push((
            r2.iter().map(|&r| half * r).collect(),
            (0..d).map(|a| (0..grid.len()).map(|k| grid.coordinate(k, a)).collect()).collect(),
        ));
        let bump: Vec<S> = r2.iter().map(|&r| (-quarter * r).exp()).collect();
        tests.push((
            bump.clone(),
            (0..d).map(|a| (0..grid.len()).map(|k| -half * grid.coordinate(k, a) * bump[k]).collect()).collect(),
        ));

        (0..n)
            .map(|k| {
                let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
                let dt = self.times[hi] - self.times[lo];
                tests
                    .iter()
                    .map(|(phi, grad)| {
                        let rate = (self.measures[hi].integrate(phi) - self.measures[lo].integrate(phi)) / dt;
                        let mu = &self.measures[k];
                        let support = mu.support();
                        let flux: S = mu
                            .weights()
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| support[*j])
                            .map(|(j, &w)| w * (0..d).map(|a| grad[a][j] * self.velocities[k].component(a)[j]).sum::<S>())
                            .sum();
                        (rate - flux).abs()
                    })
                    .fold(S::zero(), |a, b| if b > a { b } else { a })
            })
            .collect()
    }

    /// Velocity at `(time, x)`: linear in `x` between nodes and linear in time
    /// between samples `k` and `k + 1`.
    fn velocity_at(&self, k: usize, time: S, x: S) -> Option<S> {
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let a = self.velocities[k].interpolate_1d(x)?;
        let b = self.velocities[k + 1].interpolate_1d(x)?;
        let lambda = (time - t0) / (t1 - t0);
        Some(a + lambda * (b - a))
    }

    fn segment_speed(&self, k: usize) -> S {
        let all = vec![true; self.grid().len()];
        let v = self.velocities[k].max_norm(&all);
        let w = self.velocities[k + 1].max_norm(&all);
        if v > w {
            v
        } else {
            w
        }
    }
}

/// `T_{t→s}(x₀)` by classical RK4 on the curve's velocity. Steps never
/// straddle a sample time and are sized `h / (4 max|v|)` within each
/// segment, so `T_{r→s} ∘ T_{t→r}` and `T_{t→s}` share their steps whenever
/// `r` is a sample time. `T_{t→t}` is the identity.
pub fn flow_map<S: Scalar>(curve: &MeasureCurve<S>, t: S, s: S, x0: S) -> Result<S> {
    let grid = curve.grid();
    grid.ensure_one_dimensional("flow maps")?;
    let times = curve.times();
    let (first, last) = (times[0], times[times.len() - 1]);
    for tau in [t, s] {
        if !(tau >= first && tau <= last) {
            return Err(Error::InvalidArgument(format!("time {tau} outside the curve's range [{first}, {last}]")));
        }
    }
    let l = grid.half_width();
    if !(x0.abs() < l) {
        return Err(Error::InvalidArgument(format!("starting point {x0} is not inside the grid")));
    }
    if t == s || times.len() < 2 {
        return Ok(x0);
    }
    let forward = s > t;
    let h = grid.spacing();
    let two = S::lit(2.0);
    let six = S::lit(6.0);

    let mut x = x0;
    let mut now = t;
    while now != s {
        // Segment containing the stretch of time traversed next.
        let last_segment = times.len() - 2;
        let (k, target) = if forward {
            let k = times.windows(2).position(|w| now < w[1]).unwrap_or(last_segment);
            (k, if s < times[k + 1] { s } else { times[k + 1] })
        } else {
            let k = times.windows(2).position(|w| now <= w[1]).unwrap_or(last_segment);
            (k, if s > times[k] { s } else { times[k] })
        };
        let speed = curve.segment_speed(k);
        let full = times[k + 1] - times[k];
        let base_steps = if speed > S::zero() {
            (full * speed * S::lit(4.0) / h).ceil().to_usize().unwrap_or(1).max(1)
        } else {
            1
        };
        let span = target - now;
        let steps = ((span.abs() / full) * S::from_usize_lossy(base_steps)).ceil().to_usize().unwrap_or(1).max(1);
        let dt = span / S::from_usize_lossy(steps);
        let exited = |tau: S| Error::ExitedGrid { time: tau.as_f64() };
        for i in 0..steps {
            let tau = now + dt * S::from_usize_lossy(i);
            let k1 = curve.velocity_at(k, tau, x).ok_or_else(|| exited(tau))?;
            let k2 = curve.velocity_at(k, tau + dt / two, x + dt / two * k1).ok_or_else(|| exited(tau))?;
            let k3 = curve.velocity_at(k, tau + dt / two, x + dt / two * k2).ok_or_else(|| exited(tau))?;
            let k4 = curve.velocity_at(k, tau + dt, x + dt * k3).ok_or_else(|| exited(tau))?;
            x = x + dt / six * (k1 + two * k2 + two * k3 + k4);
            if !(x.abs() <= l) {
                return Err(exited(tau + dt));
            }
        }
        now = target;
    }
    Ok(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct PushforwardReport {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    /// `W₂(T_{t→s}#μ_t, μ_s)`.
    pub w2: f64,
}

/// Transports the quantile midpoints of `μ_t` through `T_{t→s}` and measures
/// the `W₂` distance of the resulting empirical law to `μ_s`. Both times must
/// be sample times of the curve.
pub fn flow_pushforward_check<S: Scalar>(curve: &MeasureCurve<S>, t: S, s: S) -> Result<PushforwardReport> {
    let index = |tau: S| {
        curve
            .times()
            .iter()
            .position(|&x| x == tau)
            .ok_or_else(|| Error::InvalidArgument(format!("{tau} is not a sample time of the curve")))
    };
    let (i, j) = (index(t)?, index(s)?);
    let points = DEFAULT_QUANTILE_POINTS;
    let sources = QuantileFunction::new(curve.measure(i))?.midpoints(points);
    let mut pushed = sources.into_iter().map(|x| flow_map(curve, t, s, x)).collect::<Result<Vec<_>>>()?;
    pushed.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let targets = QuantileFunction::new(curve.measure(j))?.midpoints(points);
    let w2_sq: S =
        pushed.iter().zip(&targets).map(|(&a, &b)| (a - b) * (a - b)).sum::<S>() / S::from_usize_lossy(points);
    Ok(PushforwardReport { from: t.as_f64(), to: s.as_f64(), points, w2: w2_sq.sqrt().as_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::new(1, 12.0, 769).unwrap()
    }

    fn times(n: usize, end: f64) -> Vec<f64> {
        (0..=n).map(|k| end * k as f64 / n as f64).collect()
    }

    #[test]
    fn translation_flow_is_a_shift() {
        let curve = MeasureCurve::translation(grid(), 0.0, 1.0, 0.5, &times(10, 1.0)).unwrap();
        let y = flow_map(&curve, 0.0, 1.0, 0.3).unwrap();
        assert!((y - 0.8).abs() < 1e-12);
        let back = flow_map(&curve, 1.0, 0.0, y).unwrap();
        assert!((back - 0.3).abs() < 1e-12);
        assert_eq!(flow_map(&curve, 0.4, 0.4, 1.7).unwrap(), 1.7);
    }

    #[test]
    fn dilation_flow_is_exponential() {
        let curve = MeasureCurve::dilation(grid(), 0.0, 1.0, 0.5, &times(50, 1.0)).unwrap();
        let y = flow_map(&curve, 0.0, 1.0, 1.0).unwrap();
        assert!((y - 0.5f64.exp()).abs() < 1e-6, "{y}");
    }

    #[test]
    fn continuity_residual_is_small_for_exact_curves() {
        let curve = MeasureCurve::dilation(grid(), 0.0, 1.0, 0.5, &times(100, 1.0)).unwrap();
        let worst = curve.continuity_residuals().into_iter().fold(0.0, f64::max);
        assert!(worst < 1e-2, "{worst}");
        let interior = curve.continuity_residuals()[1..100].iter().copied().fold(0.0, f64::max);
        assert!(interior < 1e-4, "{interior}");
    }

    #[test]
    fn leaving_the_grid_is_reported() {
        let curve = MeasureCurve::translation(grid(), 0.0, 1.0, 0.5, &times(10, 1.0)).unwrap();
        match flow_map(&curve, 0.0, 1.0, 11.9) {
            Err(Error::ExitedGrid { time }) => assert!(time > 0.0 && time <= 1.0),
            other => panic!("{other:?}"),
        }
        assert!(flow_map(&curve, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn pushforward_of_a_translation() {
        let curve = MeasureCurve::translation(grid(), 0.0, 1.0, 1.0, &times(4, 1.0)).unwrap();
        let report = flow_pushforward_check(&curve, 0.0, 1.0).unwrap();
        assert!(report.w2 < 1e-3, "{}", report.w2);
    }
}
