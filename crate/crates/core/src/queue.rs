//! Queue-generated permutations.
//!
//! Two models: the delay model, where object `i` arrives at `U_i` and leaves
//! at `U_i + X_i`, and a single-server M/G/1 queue started empty at time 0.
//! Either way the permutation relates arrival order to departure order.
//!
//! Under first-come-first-served the queue never reorders customers, so the
//! server can also pick the most recent arrival (`Lifo`) or a uniformly
//! random waiting customer (`Random`). Service is never preempted.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};

use crate::error::{Error, Result};
use crate::patterns::binomial;
use crate::perm::Permutation;
use crate::rng;
use crate::sample::{BivariateSample, TiePolicy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ServiceDist {
    Deterministic(f64),
    Exponential { rate: f64 },
    Pareto { shape: f64, scale: f64 },
}

impl ServiceDist {
    pub fn deterministic(c: f64) -> Result<Self> {
        positive("service time", c)?;
        Ok(ServiceDist::Deterministic(c))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(ServiceDist::Exponential { rate })
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("scale", scale)?;
        Ok(ServiceDist::Pareto { shape, scale })
    }

    /// Mean; infinite for Pareto with shape ≤ 1.
    pub fn mean(&self) -> f64 {
        match *self {
            ServiceDist::Deterministic(c) => c,
            ServiceDist::Exponential { rate } => 1.0 / rate,
            ServiceDist::Pareto { shape, scale } if shape > 1.0 => shape * scale / (shape - 1.0),
            ServiceDist::Pareto { .. } => f64::INFINITY,
        }
    }

    /// Third moment; infinite for Pareto with shape ≤ 3.
    pub fn third_moment(&self) -> f64 {
        match *self {
            ServiceDist::Deterministic(c) => c.powi(3),
            ServiceDist::Exponential { rate } => 6.0 / rate.powi(3),
            ServiceDist::Pareto { shape, scale } if shape > 3.0 => shape * scale.powi(3) / (shape - 3.0),
            ServiceDist::Pareto { .. } => f64::INFINITY,
        }
    }

    pub fn has_finite_third_moment(&self) -> bool {
        self.third_moment().is_finite()
    }

    pub fn sample<R: Rng + ?Sized>(&self, r: &mut R) -> f64 {
        match *self {
            ServiceDist::Deterministic(c) => c,
            ServiceDist::Exponential { rate } => Exp::new(rate).expect("validated").sample(r),
            ServiceDist::Pareto { shape, scale } => Pareto::new(scale, shape).expect("validated").sample(r),
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("{what} must be positive and finite, got {v}")))
    }
}

/// `det:<c>`, `exp:<rate>`, `pareto:<shape>:<scale>` (scale defaults to 1).
impl FromStr for ServiceDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize, default: Option<f64>| -> Result<f64> {
            match parts.get(i) {
                Some(t) => t.trim().parse().map_err(|_| Error::InvalidData(format!("bad number {t:?} in {s:?}"))),
                None => default.ok_or_else(|| Error::InvalidData(format!("missing parameter in {s:?}"))),
            }
        };
        let arity = |max: usize| -> Result<()> {
            if parts.len() > max {
                return Err(Error::InvalidData(format!("too many parameters in {s:?}")));
            }
            Ok(())
        };
        match parts[0] {
            "det" | "deterministic" => {
                arity(2)?;
                ServiceDist::deterministic(num(1, Some(1.0))?)
            }
            "exp" | "exponential" => {
                arity(2)?;
                ServiceDist::exponential(num(1, Some(1.0))?)
            }
            "pareto" => {
                arity(3)?;
                ServiceDist::pareto(num(1, None)?, num(2, Some(1.0))?)
            }
            other => Err(Error::InvalidData(format!("unknown service distribution {other:?}"))),
        }
    }
}

impl fmt::Display for ServiceDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceDist::Deterministic(c) => write!(f, "det:{c}"),
            ServiceDist::Exponential { rate } => write!(f, "exp:{rate}"),
            ServiceDist::Pareto { shape, scale } => write!(f, "pareto:{shape}:{scale}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Discipline {
    #[default]
    Fifo,
    Lifo,
    Random,
}

impl FromStr for Discipline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fifo" | "fcfs" => Ok(Discipline::Fifo),
            "lifo" | "lcfs" => Ok(Discipline::Lifo),
            "random" | "ros" | "siro" => Ok(Discipline::Random),
            _ => Err(Error::InvalidData(format!("unknown discipline {s:?}"))),
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Discipline::Fifo => "fifo",
            Discipline::Lifo => "lifo",
            Discipline::Random => "random",
        })
    }
}

/// The first `n` customers of a single-server run.
#[derive(Clone, Debug, PartialEq)]
pub struct QueueTrace {
    pub arrivals: Vec<f64>,
    pub service: Vec<f64>,
    /// Service start times.
    pub starts: Vec<f64>,
    pub departures: Vec<f64>,
    /// Busy-period index of each customer, counted from 0.
    pub busy_period: Vec<usize>,
    /// Whether each busy period touching the first `n` customers consists of
    /// those customers only.
    pub period_complete: Vec<bool>,
    pub discipline: Discipline,
}

impl QueueTrace {
    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Number of busy periods touching the first `n` customers.
    pub fn periods(&self) -> usize {
        self.period_complete.len()
    }

    /// Sizes `K_i` counted among the first `n` customers.
    pub fn period_sizes(&self) -> Vec<usize> {
        let mut k = vec![0; self.periods()];
        for &p in &self.busy_period {
            k[p] += 1;
        }
        k
    }

    /// Number of leading customers that belong to complete busy periods.
    pub fn completed_prefix(&self) -> usize {
        self.busy_period.iter().take_while(|&&p| self.period_complete[p]).count()
    }

    pub fn to_sample(&self) -> Result<BivariateSample> {
        BivariateSample::from_columns(&self.arrivals, &self.departures)
    }

    /// `arrival,departure,busy_period_id` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(["arrival", "departure", "busy_period_id"]).map_err(io)?;
        for i in 0..self.len() {
            out.write_record([
                self.arrivals[i].to_string(),
                self.departures[i].to_string(),
                self.busy_period[i].to_string(),
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// M/G/1 configuration.
#[derive(Clone, Copy, Debug)]
pub struct Mg1 {
    pub lambda: f64,
    pub service: ServiceDist,
    pub discipline: Discipline,
    /// Run even when `ρ = λ·E[S] ≥ 1`.
    pub allow_unstable: bool,
}

/// Upper bound on simulated customers per requested customer; guards
/// overloaded runs that never finish serving the first `n`.
const CUSTOMER_CAP_FACTOR: usize = 1000;

impl Mg1 {
    pub fn new(lambda: f64, service: ServiceDist) -> Self {
        Mg1 { lambda, service, discipline: Discipline::Fifo, allow_unstable: false }
    }

    pub fn discipline(mut self, d: Discipline) -> Self {
        self.discipline = d;
        self
    }

    pub fn allow_unstable(mut self, yes: bool) -> Self {
        self.allow_unstable = yes;
        self
    }

    pub fn traffic_intensity(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    /// Streams: 0 arrivals, 1 service times, 2 service order.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<QueueTrace> {
        positive("arrival rate", self.lambda)?;
        let rho = self.traffic_intensity();
        if rho >= 1.0 && !self.allow_unstable {
            return Err(Error::Unstable(rho));
        }
        let mut ra = rng::stream(seed, 0);
        let mut rs = rng::stream(seed, 1);
        let inter = Exp::new(self.lambda).expect("validated");
        let mut clock = 0.0;
        let service = self.service;
        let cap = n.saturating_mul(CUSTOMER_CAP_FACTOR).max(1_000_000);
        let mut source = move |i: usize| {
            if i >= cap {
                return None;
            }
            clock += inter.sample(&mut ra);
            Some((clock, service.sample(&mut rs)))
        };
        let trace = run_queue(n, &mut source, self.discipline, seed)?;
        Ok(trace)
    }
}

/// FIFO M/G/1 trace of the first `n` customers.
pub fn simulate_mg1(lambda: f64, service: ServiceDist, n: usize, seed: u64) -> Result<QueueTrace> {
    Mg1::new(lambda, service).simulate(n, seed)
}

/// Queue fed by explicit arrival times (non-decreasing) and service times.
pub fn simulate_queue(arrivals: &[f64], service: &[f64], discipline: Discipline, seed: u64) -> Result<QueueTrace> {
    if arrivals.len() != service.len() {
        return Err(Error::SizeMismatch { left: arrivals.len(), right: service.len() });
    }
    if arrivals.windows(2).any(|w| w[1] < w[0]) || arrivals.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidData("arrival times must be finite and non-decreasing".into()));
    }
    if service.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::InvalidData("service times must be positive".into()));
    }
    let mut source = |i: usize| arrivals.get(i).map(|&a| (a, service[i]));
    run_queue(arrivals.len(), &mut source, discipline, seed)
}

/// Event loop. `source(i)` yields arrival and service time of customer `i`
/// (0-based, in arrival order), or `None` if no further customers arrive.
fn run_queue(
    n: usize,
    source: &mut dyn FnMut(usize) -> Option<(f64, f64)>,
    discipline: Discipline,
    seed: u64,
) -> Result<QueueTrace> {
    if n == 0 {
        return Err(Error::OutOfRange("need at least one customer".into()));
    }
    let mut pick = rng::stream(seed, 2);
    let mut arrivals: Vec<f64> = Vec::new();
    let mut service: Vec<f64> = Vec::new();
    let mut period: Vec<usize> = Vec::new();
    let mut starts = vec![f64::NAN; n];
    let mut departures = vec![f64::NAN; n];
    let mut waiting: Vec<usize> = Vec::new();
    let mut pending: Option<(f64, f64)> = source(0);
    let mut t = 0.0;
    let mut current = 0usize;
    let mut started = false;
    let mut served = 0;

    while served < n {
        // admit everyone who has arrived by time t
        while let Some((a, s)) = pending {
            if a > t {
                break;
            }
            arrivals.push(a);
            service.push(s);
            period.push(current);
            waiting.push(arrivals.len() - 1);
            pending = source(arrivals.len());
        }
        if waiting.is_empty() {
            match pending {
                Some((a, _)) => {
                    // server idles until the next arrival, which opens a new period
                    if started {
                        current += 1;
                    }
                    started = true;
                    t = a;
                    continue;
                }
                None => {
                    return Err(Error::Budget { required: n as u128 + 1, budget: arrivals.len() as u128 });
                }
            }
        }
        started = true;
        let slot = match discipline {
            Discipline::Fifo => 0,
            Discipline::Lifo => waiting.len() - 1,
            Discipline::Random => pick.random_range(0..waiting.len()),
        };
        let c = waiting.remove(slot);
        let d = t + service[c];
        if c < n {
            starts[c] = t;
            departures[c] = d;
            served += 1;
        }
        t = d;
    }

    let last_open = waiting.is_empty() && pending.is_none_or(|(a, _)| a > t);
    let periods = period[n - 1] + 1;
    let mut complete = vec![true; periods];
    for &p in &period[n..] {
        if p < periods {
            complete[p] = false;
        }
    }
    if !last_open {
        complete[periods - 1] = false;
    }
    arrivals.truncate(n);
    service.truncate(n);
    period.truncate(n);
    Ok(QueueTrace {
        arrivals,
        service,
        starts,
        departures,
        busy_period: period,
        period_complete: complete,
        discipline,
    })
}

/// Pairs `(U_i, U_i + X_i)` with `U_i` uniform on `[0, 1]` and `X_i ~ G`.
///
/// Streams: 0 arrival times, 1 delays.
pub fn simulate_delay_model(g: ServiceDist, n: usize, seed: u64) -> Result<BivariateSample> {
    let mut ru = rng::stream(seed, 0);
    let mut rx = rng::stream(seed, 1);
    let pairs = (0..n)
        .map(|_| {
            let u: f64 = ru.random();
            (u, u + g.sample(&mut rx))
        })
        .collect();
    BivariateSample::new(pairs)
}

/// Permutation relating arrival order to departure order.
pub fn trace_to_permutation(trace: &QueueTrace) -> Result<Permutation> {
    sample_to_permutation(&trace.to_sample()?)
}

pub fn sample_to_permutation(s: &BivariateSample) -> Result<Permutation> {
    Ok(s.ranks(TiePolicy::Strict)?.relating)
}

/// `(t(21, Π_n), 2·M_n/(n − 1))` with `M_n` the largest busy period among
/// the first `n` customers.
pub fn verify_inversion_bound(trace: &QueueTrace) -> Result<(f64, f64)> {
    let n = trace.len();
    if n < 2 {
        return Err(Error::OutOfRange("need n >= 2".into()));
    }
    let pi = trace_to_permutation(trace)?;
    let lhs = pi.inversions() as f64 / binomial(n, 2) as f64;
    let m = trace.period_sizes().into_iter().max().unwrap_or(0);
    Ok((lhs, 2.0 * m as f64 / (n - 1) as f64))
}

/// Busy-period decomposition of the completed prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct BusyBlocks {
    /// Departure-order pattern `Ψ_i` of each complete busy period.
    pub blocks: Vec<Permutation>,
    /// Permutation of the customers in complete periods; `None` if the first
    /// period is already cut off.
    pub prefix: Option<Permutation>,
    /// True if the period containing customer `n` is cut off and excluded.
    pub excluded_final: bool,
}

impl BusyBlocks {
    pub fn direct_sum(&self) -> Option<Permutation> {
        self.blocks.iter().cloned().reduce(|acc, b| acc.direct_sum(&b))
    }
}

pub fn busy_period_blocks(trace: &QueueTrace) -> Result<BusyBlocks> {
    let m = trace.completed_prefix();
    let pi = trace_to_permutation(trace)?;
    let prefix = match m {
        0 => None,
        _ => Some(
            Permutation::new(pi.one_line()[..m].to_vec())
                .map_err(|_| Error::InvalidData("completed periods do not depart first".into()))?,
        ),
    };
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < m {
        let p = trace.busy_period[start];
        let end = start + trace.busy_period[start..m].iter().take_while(|&&q| q == p).count();
        let positions: Vec<usize> = (start + 1..=end).collect();
        blocks.push(pi.pattern_of(&positions)?);
        start = end;
    }
    Ok(BusyBlocks { blocks, prefix, excluded_final: m < trace.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn service_parsing_and_moments() {
        assert_eq!("exp:2".parse::<ServiceDist>().unwrap(), ServiceDist::Exponential { rate: 2.0 });
        assert_eq!("pareto:3.5:1".parse::<ServiceDist>().unwrap(), ServiceDist::Pareto { shape: 3.5, scale: 1.0 });
        assert_eq!("det:0.5".parse::<ServiceDist>().unwrap().mean(), 0.5);
        assert!("exp:-1".parse::<ServiceDist>().is_err());
        assert!("gamma:1".parse::<ServiceDist>().is_err());
        assert!("exp:1:2".parse::<ServiceDist>().is_err());
        assert!(!ServiceDist::pareto(3.0, 1.0).unwrap().has_finite_third_moment());
        assert!(ServiceDist::pareto(3.5, 1.0).unwrap().has_finite_third_moment());
        assert_eq!("LIFO".parse::<Discipline>().unwrap(), Discipline::Lifo);
    }

    #[test]
    fn fifo_recursion_and_identity() {
        let t = simulate_mg1(0.5, ServiceDist::exponential(1.0).unwrap(), 500, 3).unwrap();
        for i in 0..t.len() {
            let prev = if i == 0 { 0.0 } else { t.departures[i - 1] };
            let expect = t.arrivals[i].max(prev) + t.service[i];
            assert!((t.departures[i] - expect).abs() < 1e-9);
        }
        assert!(trace_to_permutation(&t).unwrap().is_identity());
    }

    #[test]
    fn unstable_needs_override() {
        let q = Mg1::new(1.5, ServiceDist::exponential(1.0).unwrap());
        assert!(matches!(q.simulate(10, 0), Err(Error::Unstable(_))));
        assert!(q.allow_unstable(true).simulate(10, 0).is_ok());
    }

    #[test]
    fn spaced_arrivals_give_singleton_periods() {
        let a: Vec<f64> = (0..10).map(|i| i as f64 * 2.0).collect();
        let t = simulate_queue(&a, &[1.0; 10], Discipline::Lifo, 0).unwrap();
        assert_eq!(t.period_sizes(), vec![1; 10]);
        assert!(t.period_complete.iter().all(|&c| c));
        let b = busy_period_blocks(&t).unwrap();
        assert!(b.blocks.iter().all(|p| *p == Permutation::identity(1)));
        assert!(!b.excluded_final);
    }

    #[test]
    fn constructed_overtaking() {
        // customer 1 occupies the server while 2 and 3 queue; LIFO serves 3 first
        let t = simulate_queue(&[0.0, 0.1, 0.2], &[1.0, 1.0, 1.0], Discipline::Lifo, 0).unwrap();
        assert_eq!(trace_to_permutation(&t).unwrap(), "1,3,2".parse().unwrap());
        let b = busy_period_blocks(&t).unwrap();
        assert_eq!(b.blocks, vec!["1,3,2".parse().unwrap()]);
        let t = simulate_queue(&[0.0, 0.1, 0.2], &[1.0, 1.0, 1.0], Discipline::Fifo, 0).unwrap();
        assert!(trace_to_permutation(&t).unwrap().is_identity());
    }

    #[test]
    fn blocks_round_trip_and_bound() {
        for seed in 0..20 {
            for d in [Discipline::Lifo, Discipline::Random] {
                let t = Mg1::new(0.7, ServiceDist::exponential(1.0).unwrap()).discipline(d).simulate(300, seed).unwrap();
                let b = busy_period_blocks(&t).unwrap();
                assert_eq!(b.direct_sum(), b.prefix);
                let (lhs, rhs) = verify_inversion_bound(&t).unwrap();
                assert!(lhs <= rhs);
            }
        }
    }

    #[test]
    fn cut_off_final_period() {
        let arrivals = [(0.0, 1.0), (5.0, 1.0), (5.5, 1.0)];
        let full = run_queue(3, &mut |i| arrivals.get(i).copied(), Discipline::Fifo, 0).unwrap();
        assert_eq!(full.busy_period, vec![0, 1, 1]);
        assert_eq!(full.completed_prefix(), 3);
        // customer 3 joins the period of customer 2, so with n = 2 that period is cut off
        let short = run_queue(2, &mut |i| arrivals.get(i).copied(), Discipline::Fifo, 0).unwrap();
        assert_eq!(short.period_complete, vec![true, false]);
        assert_eq!(short.completed_prefix(), 1);
        assert!(busy_period_blocks(&short).unwrap().excluded_final);
    }

    #[test]
    fn mean_busy_period_size() {
        let t = simulate_mg1(0.5, ServiceDist::exponential(1.0).unwrap(), 20_000, 11).unwrap();
        let k = t.period_sizes();
        let mean = k.iter().sum::<usize>() as f64 / k.len() as f64;
        assert!((mean - 2.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn delay_model() {
        let s = simulate_delay_model(ServiceDist::deterministic(0.3).unwrap(), 200, 1).unwrap();
        assert!(sample_to_permutation(&s).unwrap().is_identity());
        let s = simulate_delay_model(ServiceDist::exponential(1.0).unwrap(), 2000, 1).unwrap();
        let pi = sample_to_permutation(&s).unwrap();
        let t21 = pi.inversions() as f64 / binomial(2000, 2) as f64;
        assert!(t21 > 0.0 && t21 < 0.5);
    }

    #[test]
    fn csv_export() {
        let t = simulate_queue(&[0.0, 0.5], &[1.0, 1.0], Discipline::Fifo, 0).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "arrival,departure,busy_period_id\n0,1,0\n0.5,2,0\n");
    }
}
