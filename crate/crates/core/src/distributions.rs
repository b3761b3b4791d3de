//! Target laws on `{0, 1, 2, …}` and the total-variation distance.
//!
//! Every [`Pmf`] stores its masses up to some `kmax` and a certified bound on the mass
//! beyond `kmax`, so distances can carry an explicit truncation radius.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization slack accepted for `Σ mass + tail`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Tail target used when `kmax` is chosen automatically.
pub const AUTO_TAIL: f64 = 1e-10;

const AUTO_KMAX_LIMIT: usize = 1 << 20;

/// `℘(x) = x eˣ`.
pub fn wp(x: f64) -> f64 {
    x * x.exp()
}

/// Truncated probability mass function with a certified tail bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct Pmf {
    mass: Vec<f64>,
    tail: f64,
}

#[derive(Deserialize)]
struct RawPmf {
    mass: Vec<f64>,
    tail: f64,
}

impl TryFrom<RawPmf> for Pmf {
    type Error = Error;
    fn try_from(r: RawPmf) -> Result<Self> {
        Pmf::new(r.mass, r.tail)
    }
}

impl Pmf {
    pub fn new(mass: Vec<f64>, tail: f64) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::invalid("a pmf needs at least one mass entry"));
        }
        if mass.iter().any(|m| !(*m >= 0.0 && m.is_finite())) || !(tail >= 0.0 && tail.is_finite())
        {
            return Err(Error::invalid(
                "pmf entries and tail must be finite and nonnegative",
            ));
        }
        let total: f64 = mass.iter().sum::<f64>() + tail;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!(
                "pmf is not normalized: Σ mass + tail = {total}"
            )));
        }
        Ok(Pmf { mass, tail })
    }

    pub fn point_mass(k: usize) -> Pmf {
        let mut mass = vec![0.0; k + 1];
        mass[k] = 1.0;
        Pmf { mass, tail: 0.0 }
    }

    /// Normalizes nonnegative weights exactly (no tail).
    pub fn from_weights(weights: &[f64]) -> Result<Pmf> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid(
                "weights must be nonnegative with positive sum",
            ));
        }
        Pmf::new(weights.iter().map(|w| w / total).collect(), 0.0)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn kmax(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    /// Mean of the stored masses (a lower bound when the tail is positive).
    pub fn mean(&self) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * m)
            .sum()
    }
}

/// Mass function beyond `kmax` when the stored part was built from a defective sum.
fn residual(mass: &[f64]) -> f64 {
    (1.0 - mass.iter().sum::<f64>()).max(0.0)
}

fn check_positive(t: f64, what: &str) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("{what} must be positive, got {t}")));
    }
    Ok(())
}

/// `ln k!` for `k = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    for k in 1..=n {
        out.push(out[k - 1] + (k as f64).ln());
    }
    out
}

/// Upper bound on `P{Poisson(t) > kmax}`: terms are summed until they are negligible and in a
/// geometric regime, and the remainder is bounded by a geometric series.
fn poisson_tail(t: f64, kmax: usize) -> f64 {
    let mut j = kmax + 1;
    let mut log_term = -t + j as f64 * t.ln() - ln_factorials(j)[j];
    let mut sum = 0.0;
    loop {
        let term = log_term.exp();
        let ratio = t / (j + 1) as f64;
        if ratio <= 0.5 && (term < 1e-20 || term < 1e-18 * sum) {
            sum += term / (1.0 - ratio);
            break;
        }
        sum += term;
        j += 1;
        log_term += t.ln() - (j as f64).ln();
    }
    let crude = ((kmax + 1) as f64 * t.ln() - ln_factorials(kmax + 1)[kmax + 1]).exp();
    sum.min(crude).min(1.0)
}

/// `Poisson(t)` truncated at `kmax`.
pub fn poisson_pmf(t: f64, kmax: usize) -> Result<Pmf> {
    check_positive(t, "Poisson parameter")?;
    let lf = ln_factorials(kmax);
    let mass: Vec<f64> = (0..=kmax)
        .map(|k| (-t + k as f64 * t.ln() - lf[k]).exp())
        .collect();
    let tail = poisson_tail(t, kmax);
    Pmf::new(mass, tail)
}

/// Smallest `kmax` whose certified Poisson tail is below [`AUTO_TAIL`].
pub fn poisson_auto_kmax(t: f64) -> Result<usize> {
    check_positive(t, "Poisson parameter")?;
    let mut k = t.ceil() as usize;
    while poisson_tail(t, k) >= AUTO_TAIL {
        k += 1 + k / 8;
        if k > AUTO_KMAX_LIMIT {
            return Err(Error::TooLarge(format!(
                "Poisson({t}) needs kmax above {AUTO_KMAX_LIMIT}"
            )));
        }
    }
    // step back to the least such k
    while k > 0 && poisson_tail(t, k - 1) < AUTO_TAIL {
        k -= 1;
    }
    Ok(k)
}

/// Law of `Σ_{k=1}^W η_k`, `W ~ Poisson(s)`, `η` i.i.d. with law `cluster` on `{1, 2, …}`,
/// by the Panjer recursion `g_k = (s/k) Σ_j j f_j g_{k−j}`.
///
/// Cluster mass beyond its own `kmax` and compound mass beyond `kmax` both end up in `tail`.
pub fn compound_pmf(s: f64, cluster: &Pmf, kmax: usize) -> Result<Pmf> {
    check_positive(s, "compound intensity")?;
    if cluster.get(0) > 0.0 {
        return Err(Error::invalid(
            "cluster sizes must be at least 1 (cluster mass at 0)",
        ));
    }
    let f = cluster.mass();
    let mut g = vec![0.0; kmax + 1];
    g[0] = (-s).exp();
    for k in 1..=kmax {
        let top = k.min(f.len() - 1);
        let acc: f64 = (1..=top).map(|j| j as f64 * f[j] * g[k - j]).sum();
        g[k] = s / k as f64 * acc;
    }
    let tail = residual(&g);
    Pmf::new(g, tail)
}

/// Geometric law `P{ζ = k} = (1 − ρ) ρ^{k−1}` on `{1, 2, …}`, truncated at `kmax`.
pub fn geometric_cluster(rho: f64, kmax: usize) -> Result<Pmf> {
    check_rho(rho)?;
    let mut mass = vec![0.0; kmax + 1];
    for (k, m) in mass.iter_mut().enumerate().skip(1) {
        *m = (1.0 - rho) * rho.powi(k as i32 - 1);
    }
    Pmf::new(mass, rho.powi(kmax as i32))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid(format!("ρ must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

/// Pólya–Aeppli law: `W ~ Poisson(t(1 − ρ))` clusters of geometric(ρ) size, from the closed form
/// `P{Y = k} = Σ_{j=1}^k e^{−λ} λ^j / j! · C(k−1, j−1) (1−ρ)^j ρ^{k−j}` with `λ = t(1 − ρ)`.
pub fn polya_aeppli_pmf(t: f64, rho: f64, kmax: usize) -> Result<Pmf> {
    check_positive(t, "Pólya–Aeppli parameter t")?;
    check_rho(rho)?;
    if rho == 0.0 {
        return poisson_pmf(t, kmax);
    }
    let lambda = t * (1.0 - rho);
    let lf = ln_factorials(kmax);
    let (ln_l, ln_q, ln_r) = (lambda.ln(), (1.0 - rho).ln(), rho.ln());
    let mut mass = vec![0.0; kmax + 1];
    mass[0] = (-lambda).exp();
    for (k, m) in mass.iter_mut().enumerate().skip(1) {
        *m = (1..=k)
            .map(|j| {
                let ln_binom = lf[k - 1] - lf[j - 1] - lf[k - j];
                (-lambda + j as f64 * (ln_l + ln_q) - lf[j] + ln_binom + (k - j) as f64 * ln_r)
                    .exp()
            })
            .sum();
    }
    let tail = residual(&mass);
    Pmf::new(mass, tail)
}

/// Smallest `kmax` for which the Pólya–Aeppli residual mass is below [`AUTO_TAIL`].
pub fn polya_aeppli_auto_kmax(t: f64, rho: f64) -> Result<usize> {
    check_positive(t, "Pólya–Aeppli parameter t")?;
    check_rho(rho)?;
    if rho == 0.0 {
        return poisson_auto_kmax(t);
    }
    let mut k = ((t / (1.0 - rho)).ceil() as usize).max(8);
    loop {
        if polya_aeppli_pmf(t, rho, k)?.tail() < AUTO_TAIL {
            return Ok(k);
        }
        k *= 2;
        if k > AUTO_KMAX_LIMIT {
            return Err(Error::TooLarge(format!(
                "Pólya–Aeppli({t}, {rho}) needs kmax above {AUTO_KMAX_LIMIT}"
            )));
        }
    }
}

/// Sup-form total variation `½ Σ |p_k − q_k|` and the truncation radius `½ (tail_p + tail_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvDistance {
    pub value: f64,
    pub radius: f64,
}

impl TvDistance {
    /// `Σ |p_k − q_k|`, the full variation.
    pub fn full(&self) -> f64 {
        2.0 * self.value
    }
}

pub fn tv_distance(p: &Pmf, q: &Pmf) -> Result<TvDistance> {
    for x in [p, q] {
        let total = x.mass.iter().sum::<f64>() + x.tail;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!(
                "pmf is not normalized: total {total}"
            )));
        }
    }
    let len = p.mass.len().max(q.mass.len());
    let sum: f64 = (0..len).map(|k| (p.get(k) - q.get(k)).abs()).sum();
    Ok(TvDistance {
        value: (0.5 * sum).clamp(0.0, 1.0),
        radius: 0.5 * (p.tail + q.tail),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wp_values() {
        assert_eq!(wp(0.0), 0.0);
        assert!(close(wp(1.0), std::f64::consts::E, 1e-15));
        assert!(close(wp(2f64.ln()), 2.0 * 2f64.ln(), 1e-15));
    }

    #[test]
    fn poisson_examples() {
        let p = poisson_pmf(1.0, 30).unwrap();
        assert!(close(p.get(0), (-1f64).exp(), 1e-16));
        let tiny = poisson_pmf(1e-9, 5).unwrap();
        assert!(tiny.get(0) > 1.0 - 1e-8);
        let p = poisson_pmf(2.0, 40).unwrap();
        assert!(close(p.mass().iter().sum::<f64>() + p.tail(), 1.0, 1e-12));
        assert!(poisson_pmf(0.0, 5).is_err());
        assert!(poisson_pmf(-1.0, 5).is_err());
    }

    #[test]
    fn poisson_tail_is_certified() {
        for t in [0.1, 1.0, 3.0, 10.0, 50.0] {
            for kmax in [0usize, 1, 5, 20, 80] {
                let p = poisson_pmf(t, kmax).unwrap();
                let crude = (1..=kmax + 1).fold(1.0, |acc, j| acc * t / j as f64);
                assert!(
                    p.tail() <= crude * (1.0 + 1e-12) + 1e-300,
                    "t={t} kmax={kmax}"
                );
                // tail dominates the next term
                let next =
                    (-t + (kmax + 1) as f64 * t.ln() - ln_factorials(kmax + 1)[kmax + 1]).exp();
                assert!(p.tail() >= next * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn auto_kmax() {
        for t in [0.5, 1.0, 4.0, 30.0] {
            let k = poisson_auto_kmax(t).unwrap();
            assert!(poisson_pmf(t, k).unwrap().tail() < AUTO_TAIL);
            if k > 0 {
                assert!(poisson_tail(t, k - 1) >= AUTO_TAIL);
            }
        }
        let k = polya_aeppli_auto_kmax(1.0, 0.6).unwrap();
        assert!(polya_aeppli_pmf(1.0, 0.6, k).unwrap().tail() < AUTO_TAIL);
    }

    #[test]
    fn compound_identity_case() {
        let point = Pmf::new(vec![0.0, 1.0], 0.0).unwrap();
        let c = compound_pmf(1.7, &point, 40).unwrap();
        let p = poisson_pmf(1.7, 40).unwrap();
        for k in 0..=40 {
            assert!(close(c.get(k), p.get(k), 1e-12));
        }
        assert!(close(c.get(0), (-1.7f64).exp(), 1e-15));
        assert!(compound_pmf(1.0, &Pmf::point_mass(0), 10).is_err());
    }

    #[test]
    fn compound_matches_brute_force_mixture() {
        let s: f64 = 0.5;
        let cluster = Pmf::new(vec![0.0, 0.5, 0.5], 0.0).unwrap();
        let kmax = 20;
        let c = compound_pmf(s, &cluster, kmax).unwrap();
        // Σ_w Pois(s)(w) · cluster^{*w}, w ≤ 60
        let mut oracle = vec![0.0; kmax + 1];
        let mut conv = vec![0.0; kmax + 1];
        conv[0] = 1.0;
        let mut pois = (-s).exp();
        for w in 0..=60usize {
            if w > 0 {
                pois *= s / w as f64;
                let mut next = vec![0.0; kmax + 1];
                for (i, ci) in conv.iter().enumerate() {
                    for (j, fj) in cluster.mass().iter().enumerate() {
                        if i + j <= kmax {
                            next[i + j] += ci * fj;
                        }
                    }
                }
                conv = next;
            }
            for k in 0..=kmax {
                oracle[k] += pois * conv[k];
            }
        }
        for (k, want) in oracle.iter().enumerate() {
            assert!(close(c.get(k), *want, 1e-10), "k={k}");
        }
    }

    #[test]
    fn polya_aeppli_examples() {
        let pa = polya_aeppli_pmf(1.3, 0.0, 30).unwrap();
        let p = poisson_pmf(1.3, 30).unwrap();
        for k in 0..=30 {
            assert!(close(pa.get(k), p.get(k), 1e-12));
        }
        let pa = polya_aeppli_pmf(1.0, 0.5, 30).unwrap();
        assert!(close(pa.get(0), (-0.5f64).exp(), 1e-15));
        assert!(close(pa.get(1), 0.15163266492815836, 1e-14));
        assert!(polya_aeppli_pmf(1.0, 1.0, 10).is_err());
        assert!(polya_aeppli_pmf(1.0, -0.1, 10).is_err());
    }

    #[test]
    fn compound_geometric_equals_polya_aeppli() {
        for (t, rho) in [(1.0, 0.6), (0.5, 0.2), (3.0, 0.9), (2.0, 0.375)] {
            let kmax = 60;
            let via_panjer = compound_pmf(
                t * (1.0 - rho),
                &geometric_cluster(rho, kmax).unwrap(),
                kmax,
            )
            .unwrap();
            let closed = polya_aeppli_pmf(t, rho, kmax).unwrap();
            for k in 0..=kmax {
                assert!(
                    close(via_panjer.get(k), closed.get(k), 1e-12 + closed.tail()),
                    "t={t} rho={rho} k={k}"
                );
            }
        }
    }

    #[test]
    fn polya_aeppli_mean() {
        for (t, rho) in [(1.0, 0.6), (2.5, 0.3), (0.7, 0.8)] {
            let k = polya_aeppli_auto_kmax(t, rho).unwrap().max(200);
            let pa = polya_aeppli_pmf(t, rho, k).unwrap();
            assert!(
                close(pa.mean(), t, 1e-7),
                "t={t} rho={rho} mean={}",
                pa.mean()
            );
        }
    }

    #[test]
    fn tv_examples() {
        let p = poisson_pmf(1.0, 60).unwrap();
        assert_eq!(tv_distance(&p, &p).unwrap().value, 0.0);
        let d = tv_distance(&Pmf::point_mass(0), &Pmf::point_mass(1)).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.radius, 0.0);
        let q = poisson_pmf(1.2, 60).unwrap();
        let d = tv_distance(&p, &q).unwrap();
        assert!(close(d.value, 0.0731316161360400, 1e-12));
        assert!(d.full() <= 2.0 * wp(0.2));
        assert!(d.value <= wp(0.2));
    }

    #[test]
    fn poisson_total_variation_grid() {
        let grid: Vec<f64> = (1..=30).map(|i| i as f64 / 10.0).collect();
        let pmfs: Vec<Pmf> = grid.iter().map(|&t| poisson_pmf(t, 200).unwrap()).collect();
        for (i, a) in grid.iter().enumerate() {
            for (j, b) in grid.iter().enumerate() {
                let d = tv_distance(&pmfs[i], &pmfs[j]).unwrap();
                assert!(d.full() <= 2.0 * wp((a - b).abs()) + 1e-15, "{a} {b}");
            }
        }
    }

    #[test]
    fn json_shape_and_validation() {
        let p = Pmf::new(vec![0.25, 0.5, 0.25], 0.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"mass":[0.25,0.5,0.25],"tail":0.0}"#);
        assert_eq!(serde_json::from_str::<Pmf>(&s).unwrap(), p);
        assert!(serde_json::from_str::<Pmf>(r#"{"mass":[0.5],"tail":0.0}"#).is_err());
        assert!(serde_json::from_str::<Pmf>(r#"{"mass":[1.5,-0.5],"tail":0.0}"#).is_err());
    }
}
