//! Closed-form evaluation of the two-state cooperative slotted ALOHA chain.
//!
//! State 1 ("busy") is a slot carrying exactly one transmission; state 2
//! groups idle and collision slots. With `m` saturated users that all
//! retransmit with probability `pr`:
//!
//! * `p0 = m·pr·(1−pr)^(m−1)` : non-busy → busy (exactly one transmitter),
//! * `pc = (1−pr)^(m−1)` : busy → busy (none of the other `m−1` users
//!   interferes with the current holder).
//!
//! The stationary busy probability `π1 = p0 / (1 − pc + p0)` is the system
//! throughput. Everything here is a pure function of its inputs.

use serde::Serialize;
use thiserror::Error;

/// Errors raised by the analytic model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("user count must be at least 1 (got {0})")]
    InvalidUsers(u32),
    #[error("{name} must be a probability in [0, 1] (got {value})")]
    InvalidProbability { name: &'static str, value: f64 },
    /// `pc = 1` and `p0 = 0`: every distribution is stationary.
    #[error("degenerate chain: stationary distribution is not unique (pr = 0)")]
    DegenerateChain,
    #[error("mean channel occupancy is unbounded (pc = 1)")]
    UnboundedOccupancy,
    #[error("delay is unbounded (throughput is zero)")]
    UnboundedDelay,
    #[error("occupancy must be a finite number of slots >= 1 (got {0})")]
    InvalidOccupancy(f64),
    #[error("occupancy does not depend on pr when there is a single user")]
    DegenerateUsers,
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// One analytic model instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    m: u32,
    pr: f64,
    pt: f64,
}

impl ModelParams {
    /// Saturated model with `pt = 1`.
    pub fn new(m: u32, pr: f64) -> Result<Self> {
        Self::with_pt(m, pr, 1.0)
    }

    /// `pt` is stored and echoed but does not enter any formula: in the
    /// saturated model every non-holder is backlogged.
    pub fn with_pt(m: u32, pr: f64, pt: f64) -> Result<Self> {
        if m == 0 {
            return Err(ModelError::InvalidUsers(m));
        }
        check_probability("pr", pr)?;
        check_probability("pt", pt)?;
        Ok(Self { m, pr, pt })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn pr(&self) -> f64 {
        self.pr
    }

    pub fn pt(&self) -> f64 {
        self.pt
    }

    /// `n1 = 1 + 2 + … + m`, the user weight of the busy state.
    pub fn n_busy(&self) -> f64 {
        let m = f64::from(self.m);
        m * (m + 1.0) / 2.0
    }

    /// `n2 = 2 + … + m`, the user weight of the idle/collision state.
    pub fn n_contended(&self) -> f64 {
        let m = f64::from(self.m);
        (m - 1.0) * (m + 2.0) / 2.0
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::InvalidProbability { name, value })
    }
}

/// Row-stochastic 2×2 matrix `[[pc, 1−pc], [p0, 1−p0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionMatrix {
    /// busy → busy
    pub pc: f64,
    /// non-busy → busy
    pub p0: f64,
}

impl TransitionMatrix {
    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.pc, 1.0 - self.pc], [self.p0, 1.0 - self.p0]]
    }

    fn is_degenerate(&self) -> bool {
        self.pc == 1.0 && self.p0 == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryDistribution {
    /// Long-run busy probability, i.e. the system throughput.
    pub pi1: f64,
    /// Long-run idle-or-collision probability.
    pub pi2: f64,
}

impl StationaryDistribution {
    /// `π·P` for the given matrix.
    pub fn apply(&self, matrix: &TransitionMatrix) -> [f64; 2] {
        let rows = matrix.rows();
        [
            self.pi1 * rows[0][0] + self.pi2 * rows[1][0],
            self.pi1 * rows[0][1] + self.pi2 * rows[1][1],
        ]
    }
}

pub fn transition_probabilities(params: &ModelParams) -> TransitionMatrix {
    let m = f64::from(params.m);
    // powf(0, 0) == 1, so a lone user never sees interference.
    let pc = (1.0 - params.pr).powf(m - 1.0);
    TransitionMatrix {
        pc,
        p0: m * params.pr * pc,
    }
}

pub fn stationary_closed_form(matrix: &TransitionMatrix) -> Result<StationaryDistribution> {
    if matrix.is_degenerate() {
        return Err(ModelError::DegenerateChain);
    }
    let denom = 1.0 - matrix.pc + matrix.p0;
    Ok(StationaryDistribution {
        pi1: matrix.p0 / denom,
        pi2: (1.0 - matrix.pc) / denom,
    })
}

/// Solves `π = πP, π1 + π2 = 1` by Gaussian elimination with partial
/// pivoting. Shares no arithmetic with [`stationary_closed_form`].
pub fn stationary_linear_solve(matrix: &TransitionMatrix) -> Result<StationaryDistribution> {
    if matrix.is_degenerate() {
        return Err(ModelError::DegenerateChain);
    }
    // (pc − 1)·π1 + p0·π2 = 0
    //        π1 +    π2 = 1
    let mut a = [[matrix.pc - 1.0, matrix.p0, 0.0], [1.0, 1.0, 1.0]];
    if a[1][0].abs() > a[0][0].abs() {
        a.swap(0, 1);
    }
    let [pivot, mut row] = a;
    let factor = row[0] / pivot[0];
    for (x, p) in row.iter_mut().zip(pivot) {
        *x -= factor * p;
    }
    a[1] = row;
    if a[1][1] == 0.0 {
        return Err(ModelError::DegenerateChain);
    }
    let pi2 = a[1][2] / a[1][1];
    let pi1 = (a[0][2] - a[0][1] * pi2) / a[0][0];
    Ok(StationaryDistribution { pi1, pi2 })
}

pub fn stationary(params: &ModelParams) -> Result<StationaryDistribution> {
    stationary_closed_form(&transition_probabilities(params))
}

/// System throughput `π1`. Zero when `pr = 1` and `m ≥ 2`.
pub fn throughput(params: &ModelParams) -> Result<f64> {
    stationary(params).map(|s| s.pi1)
}

/// Limit of the throughput as `pr → 0`.
///
/// Expanding `(1 − (1−pr)^(m−1)) / pr` as the geometric sum
/// `Σ_{k=0}^{m−2} (1−pr)^k` gives `m − 1` at `pr = 0`, so
/// `π1 → m / (m − 1 + m) = m / (2m − 1)`. The published statement of this
/// limit, `m / 2^(m−1)`, does not follow from that expansion; see
/// [`published_throughput_limit`].
pub fn asymptotic_throughput_limit(m: u32) -> f64 {
    let m = f64::from(m);
    m / (2.0 * m - 1.0)
}

/// The limit as printed in the source derivation, `m / 2^(m−1)`. Kept only
/// so reports can show where it diverges from [`asymptotic_throughput_limit`].
pub fn published_throughput_limit(m: u32) -> f64 {
    let m = f64::from(m);
    m / 2f64.powf(m - 1.0)
}

/// Mean busy-run length `U = 1 / (1 − pc)` in slots.
pub fn occupancy(params: &ModelParams) -> Result<f64> {
    let matrix = transition_probabilities(params);
    if matrix.pc == 1.0 {
        return Err(ModelError::UnboundedOccupancy);
    }
    Ok(1.0 / (1.0 - matrix.pc))
}

/// Inverse of [`occupancy`] in `pr`: `pr = 1 − ((u−1)/u)^(1/(m−1))`.
pub fn pr_from_occupancy(u: f64, m: u32) -> Result<f64> {
    if !u.is_finite() || u < 1.0 {
        return Err(ModelError::InvalidOccupancy(u));
    }
    if m == 0 {
        return Err(ModelError::InvalidUsers(m));
    }
    if m == 1 {
        return Err(ModelError::DegenerateUsers);
    }
    if u == 1.0 {
        return Ok(1.0);
    }
    // ln((u−1)/u) = ln1p(−1/u); expm1 keeps precision for large u.
    let pr = -((-1.0 / u).ln_1p() / f64::from(m - 1)).exp_m1();
    Ok(pr.clamp(0.0, 1.0))
}

/// Throughput as a function of the mean occupancy `u`.
pub fn throughput_at_occupancy(u: f64, m: u32) -> Result<f64> {
    throughput(&ModelParams::new(m, pr_from_occupancy(u, m)?)?)
}

/// `(Q, D)` with `D·π1 == Q` bitwise whenever `π1 > 0`.
///
/// `D = Q/π1 = n1 + (π2/π1)·n2` is evaluated first and `Q` is taken as
/// `D·π1`; dividing a separately computed `Q` by `π1` does not round-trip.
fn weighted_users_and_delay(params: &ModelParams, s: &StationaryDistribution) -> (f64, f64) {
    let (n1, n2) = (params.n_busy(), params.n_contended());
    if s.pi1 == 0.0 {
        return (n2, f64::INFINITY);
    }
    let d = n1 + (s.pi2 / s.pi1) * n2;
    (d * s.pi1, d)
}

/// `Q = π1·n1 + π2·n2`, a convex combination lying in `[n1 − 1, n1]`.
pub fn q_mean(params: &ModelParams) -> Result<f64> {
    let s = stationary(params)?;
    Ok(weighted_users_and_delay(params, &s).0)
}

/// Aggregate delay `D = Q / π1` in slots.
pub fn delay(params: &ModelParams) -> Result<f64> {
    let s = stationary(params)?;
    match weighted_users_and_delay(params, &s) {
        (_, d) if d.is_finite() => Ok(d),
        _ => Err(ModelError::UnboundedDelay),
    }
}

/// Every closed-form quantity for one parameter point.
///
/// Unbounded occupancy (`pc = 1`) and unbounded delay (`π1 = 0`) are
/// represented as `f64::INFINITY`; the only hard failure is
/// [`ModelError::DegenerateChain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainQuantities {
    pub params: ModelParams,
    pub matrix: TransitionMatrix,
    pub stationary: StationaryDistribution,
    pub occupancy_u: f64,
    pub q_mean: f64,
    pub delay_d: f64,
    pub per_user_throughput: f64,
}

impl ChainQuantities {
    pub fn evaluate(params: &ModelParams) -> Result<Self> {
        let matrix = transition_probabilities(params);
        let stationary = stationary_closed_form(&matrix)?;
        let occupancy_u = if matrix.pc == 1.0 {
            f64::INFINITY
        } else {
            1.0 / (1.0 - matrix.pc)
        };
        let (q_mean, delay_d) = weighted_users_and_delay(params, &stationary);
        Ok(Self {
            params: *params,
            matrix,
            stationary,
            occupancy_u,
            q_mean,
            delay_d,
            per_user_throughput: stationary.pi1 / f64::from(params.m),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: u32, pr: f64) -> ModelParams {
        ModelParams::new(m, pr).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert_eq!(ModelParams::new(0, 0.5), Err(ModelError::InvalidUsers(0)));
        assert!(matches!(
            ModelParams::new(3, 1.5),
            Err(ModelError::InvalidProbability { name: "pr", .. })
        ));
        assert!(ModelParams::new(3, f64::NAN).is_err());
        assert!(matches!(
            ModelParams::with_pt(3, 0.5, -0.1),
            Err(ModelError::InvalidProbability { name: "pt", .. })
        ));
    }

    #[test]
    fn transition_probability_examples() {
        let t = transition_probabilities(&params(2, 0.0));
        assert_eq!((t.p0, t.pc), (0.0, 1.0));
        let t = transition_probabilities(&params(2, 1.0));
        assert_eq!((t.p0, t.pc), (0.0, 0.0));
        let t = transition_probabilities(&params(2, 0.5));
        assert_eq!((t.p0, t.pc), (0.5, 0.5));
        let t = transition_probabilities(&params(1, 0.4));
        assert_eq!((t.p0, t.pc), (0.4, 1.0));
    }

    #[test]
    fn stationary_examples() {
        let half = TransitionMatrix { pc: 0.5, p0: 0.5 };
        for s in [
            stationary_closed_form(&half),
            stationary_linear_solve(&half),
        ] {
            assert_eq!(s.unwrap(), StationaryDistribution { pi1: 0.5, pi2: 0.5 });
        }
        let dead = TransitionMatrix { pc: 0.0, p0: 0.0 };
        for s in [
            stationary_closed_form(&dead),
            stationary_linear_solve(&dead),
        ] {
            assert_eq!(s.unwrap(), StationaryDistribution { pi1: 0.0, pi2: 1.0 });
        }
        let absorbing = TransitionMatrix { pc: 1.0, p0: 0.4 };
        for s in [
            stationary_closed_form(&absorbing),
            stationary_linear_solve(&absorbing),
        ] {
            assert_eq!(s.unwrap(), StationaryDistribution { pi1: 1.0, pi2: 0.0 });
        }
    }

    #[test]
    fn degenerate_chain_when_pr_is_zero() {
        for m in [1, 2, 7] {
            let p = params(m, 0.0);
            let t = transition_probabilities(&p);
            assert_eq!(stationary_closed_form(&t), Err(ModelError::DegenerateChain));
            assert_eq!(
                stationary_linear_solve(&t),
                Err(ModelError::DegenerateChain)
            );
            assert_eq!(throughput(&p), Err(ModelError::DegenerateChain));
            assert_eq!(q_mean(&p), Err(ModelError::DegenerateChain));
            assert_eq!(delay(&p), Err(ModelError::DegenerateChain));
            assert_eq!(occupancy(&p), Err(ModelError::UnboundedOccupancy));
            assert_eq!(
                ChainQuantities::evaluate(&p),
                Err(ModelError::DegenerateChain)
            );
        }
    }

    #[test]
    fn certain_collision_gives_zero_throughput_and_unbounded_delay() {
        for m in [2, 3, 50] {
            let p = params(m, 1.0);
            assert_eq!(throughput(&p), Ok(0.0));
            assert_eq!(occupancy(&p), Ok(1.0));
            assert_eq!(delay(&p), Err(ModelError::UnboundedDelay));
            assert_eq!(q_mean(&p), Ok(p.n_contended()));
            let c = ChainQuantities::evaluate(&p).unwrap();
            assert_eq!(c.delay_d, f64::INFINITY);
            assert!(!c.q_mean.is_nan());
        }
    }

    #[test]
    fn single_user_holds_forever() {
        let p = params(1, 0.4);
        assert_eq!(throughput(&p), Ok(1.0));
        assert_eq!(occupancy(&p), Err(ModelError::UnboundedOccupancy));
        assert_eq!(q_mean(&p), Ok(1.0));
        assert_eq!(delay(&p), Ok(1.0));
        let c = ChainQuantities::evaluate(&p).unwrap();
        assert_eq!(c.occupancy_u, f64::INFINITY);
        assert_eq!(c.per_user_throughput, 1.0);
        assert_eq!(pr_from_occupancy(2.0, 1), Err(ModelError::DegenerateUsers));
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput(&params(2, 0.5)), Ok(0.5));
        // Hand evaluation: p0 = 2·0.2·0.8^9, pc = 0.8^9.
        let pc = 0.8f64.powi(9);
        let p0 = 10.0 * 0.2 * pc;
        let expected = p0 / (1.0 - pc + p0);
        let got = throughput(&params(10, 0.2)).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.23667).abs() < 5e-6);
    }

    #[test]
    fn asymptotic_limit_examples() {
        assert_eq!(asymptotic_throughput_limit(1), 1.0);
        assert!((asymptotic_throughput_limit(2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((asymptotic_throughput_limit(50) - 50.0 / 99.0).abs() < 1e-15);
        let near_zero = throughput(&params(2, 1e-8)).unwrap();
        assert!((near_zero - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(published_throughput_limit(1), 1.0);
        assert_eq!(published_throughput_limit(3), 0.75);
    }

    #[test]
    fn occupancy_examples() {
        assert_eq!(occupancy(&params(2, 0.5)), Ok(2.0));
        assert_eq!(occupancy(&params(2, 1.0)), Ok(1.0));
        let u = occupancy(&params(10, 0.3)).unwrap();
        assert!((u - 1.0 / (1.0 - 0.7f64.powi(9))).abs() < 1e-12);
        assert!((u - 1.04205).abs() < 5e-6);
    }

    #[test]
    fn pr_from_occupancy_examples() {
        assert!((pr_from_occupancy(2.0, 2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pr_from_occupancy(1.0, 5), Ok(1.0));
        let pr = pr_from_occupancy(24.0, 50).unwrap();
        assert!((pr - 8.685e-4).abs() < 5e-7, "{pr}");
        let th = throughput(&params(50, pr)).unwrap();
        assert!((th - 0.4996).abs() < 5e-5, "{th}");
        assert_eq!(
            pr_from_occupancy(0.5, 5),
            Err(ModelError::InvalidOccupancy(0.5))
        );
        assert!(pr_from_occupancy(f64::INFINITY, 5).is_err());
        assert!(pr_from_occupancy(f64::NAN, 5).is_err());
    }

    #[test]
    fn q_and_delay_examples() {
        let p = params(2, 0.5);
        assert_eq!(q_mean(&p), Ok(2.5));
        assert_eq!(delay(&p), Ok(5.0));

        let p = params(10, 0.2);
        let pi1 = throughput(&p).unwrap();
        let q = pi1 * 55.0 + (1.0 - pi1) * 54.0;
        assert!((q_mean(&p).unwrap() - q).abs() < 1e-12);
        assert!((delay(&p).unwrap() - q / pi1).abs() < 1e-10);
    }

    #[test]
    fn delay_times_throughput_is_q_bitwise() {
        for m in 1..=50 {
            for i in 1..=99 {
                let p = params(m, f64::from(i) / 100.0);
                let (d, th, q) = (delay(&p), throughput(&p).unwrap(), q_mean(&p).unwrap());
                if let Ok(d) = d {
                    assert_eq!(d * th, q, "m={m} pr={}", p.pr());
                }
            }
        }
    }

    #[test]
    fn chain_quantities_match_individual_operations() {
        let p = params(7, 0.13);
        let c = ChainQuantities::evaluate(&p).unwrap();
        assert_eq!(c.stationary.pi1, throughput(&p).unwrap());
        assert_eq!(c.occupancy_u, occupancy(&p).unwrap());
        assert_eq!(c.q_mean, q_mean(&p).unwrap());
        assert_eq!(c.delay_d, delay(&p).unwrap());
        assert_eq!(c.delay_d * c.stationary.pi1, c.q_mean);
    }
}
