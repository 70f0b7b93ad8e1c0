//! Student-t MRF image prior `f(u) = Σ_i θ_i Σ_p φ((K_i u)_p)`,
//! `φ(t) = log(1 + t²)`, with an ℓ2 or ℓ1 data term as `g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm};
use crate::objective::{Composite, ConvexTerm, SmoothTerm};
use crate::prox::{ShiftedL1, WeightedQuadratic};

use super::conv::{self, dct_filter_bank, Filter};

/// Target for [`mrf_lipschitz_bound`] when scaling the default weights.
pub const DEFAULT_MRF_LIPSCHITZ: f64 = 100.0;
pub const DEFAULT_LAMBDA_L2: f64 = 0.05;
pub const DEFAULT_LAMBDA_L1: f64 = 0.5;

const POWER_ITERATIONS: usize = 200;

pub fn phi(t: f64) -> f64 {
    (t * t).ln_1p()
}

pub fn phi_prime(t: f64) -> f64 {
    2.0 * t / (1.0 + t * t)
}

/// The smooth part of the MRF energy.
#[derive(Debug, Clone)]
pub struct MrfPrior {
    pub filters: Vec<Filter>,
    pub weights: Vec<f64>,
    pub height: usize,
    pub width: usize,
}

impl MrfPrior {
    pub fn new(filters: Vec<Filter>, weights: Vec<f64>, height: usize, width: usize) -> Result<Self> {
        if filters.len() != weights.len() {
            return Err(Error::Config(format!(
                "{} filters but {} weights",
                filters.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("filter weights must be finite and >= 0, got {w}")));
        }
        if let Some(f) = filters.iter().find(|f| f.radius() > height || f.radius() > width) {
            return Err(Error::Config(format!(
                "{0}x{0} kernel larger than {height}x{width} image",
                f.size()
            )));
        }
        Ok(Self {
            filters,
            weights,
            height,
            width,
        })
    }

    /// The 48 non-constant 7×7 DCT filters with equal weights scaled so
    /// that [`mrf_lipschitz_bound`] is about `DEFAULT_MRF_LIPSCHITZ`.
    pub fn dct(height: usize, width: usize) -> Result<Self> {
        Self::dct_subset(height, width, 48)
    }

    /// The first `count` DCT filters, weighted as in [`MrfPrior::dct`].
    pub fn dct_subset(height: usize, width: usize, count: usize) -> Result<Self> {
        let filters: Vec<Filter> = dct_filter_bank(7).into_iter().take(count).collect();
        let unit = Self::new(filters, vec![1.0; count.min(48)], height, width)?;
        let bound = mrf_lipschitz_bound(&unit)?;
        let theta = DEFAULT_MRF_LIPSCHITZ / bound;
        Ok(Self {
            weights: vec![theta; unit.filters.len()],
            ..unit
        })
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Filters sharing a horizontal pass: separable filters grouped by
    /// their row vector, every other filter on its own.
    fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, f) in self.filters.iter().enumerate() {
            let shared = match f {
                Filter::Separable { row, .. } => groups.iter_mut().find(|g| {
                    matches!(&self.filters[g[0]], Filter::Separable { row: r0, .. } if r0 == row)
                }),
                Filter::Dense { .. } => None,
            };
            match shared {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        groups
    }

    /// `(θ_i Σ φ(K_i u), θ_i K_iᵀ φ'(K_i u))` summed over one group.
    fn group_terms(&self, u: &[f64], group: &[usize], with_value: bool, with_grad: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        let (h, w) = (self.height, self.width);
        let value_of = |ku: &[f64], theta: f64| {
            if with_value {
                theta * ku.iter().map(|&t| phi(t)).sum::<f64>()
            } else {
                0.0
            }
        };
        let slope = |ku: &[f64], theta: f64| -> Vec<f64> { ku.iter().map(|&t| theta * phi_prime(t)).collect() };
        let Filter::Separable { row, .. } = &self.filters[group[0]] else {
            let (k, theta) = (&self.filters[group[0]], self.weights[group[0]]);
            let ku = k.apply(u, h, w)?;
            let grad = if with_grad { k.adjoint(&slope(&ku, theta), h, w)? } else { Vec::new() };
            return Ok((vec![value_of(&ku, theta)], grad));
        };
        let r = row.len() / 2;
        let tmp = conv::horizontal(&conv::pad(u, h, w, r), h, w, row);
        let mut values = Vec::with_capacity(group.len());
        let mut acc = if with_grad { vec![0.0; tmp.len()] } else { Vec::new() };
        for &i in group {
            let Filter::Separable { col, .. } = &self.filters[i] else { unreachable!() };
            let theta = self.weights[i];
            let ku = conv::vertical(&tmp, h, w, col);
            values.push(value_of(&ku, theta));
            if with_grad {
                conv::vertical_adjoint(&slope(&ku, theta), h, w, col, &mut acc);
            }
        }
        if !with_grad {
            return Ok((values, Vec::new()));
        }
        let mut padded = vec![0.0; (h + 2 * r) * (w + 2 * r)];
        conv::horizontal_adjoint(&acc, h, w, row, &mut padded);
        Ok((values, conv::fold(&padded, h, w, r)))
    }

    /// Energy (zero unless `with_value`) and gradient (empty unless
    /// `with_grad`); sums run in a fixed order.
    fn evaluate(&self, u: &[f64], with_value: bool, with_grad: bool) -> Result<(f64, Vec<f64>)> {
        check_len(self.len(), u.len())?;
        if let Some(f) = self.filters.iter().find(|f| f.radius() > self.height || f.radius() > self.width) {
            return Err(Error::Config(format!(
                "{0}x{0} kernel larger than {1}x{2} image",
                f.size(),
                self.height,
                self.width
            )));
        }
        let groups = self.groups();
        let parts: Vec<(Vec<f64>, Vec<f64>)> = groups
            .par_iter()
            .map(|g| self.group_terms(u, g, with_value, with_grad))
            .collect::<Result<_>>()?;
        let mut per_filter = vec![0.0; self.filters.len()];
        let mut grad = if with_grad { vec![0.0; u.len()] } else { Vec::new() };
        for (g, (values, gg)) in groups.iter().zip(&parts) {
            for (&i, &v) in g.iter().zip(values) {
                per_filter[i] = v;
            }
            for (a, b) in grad.iter_mut().zip(gg) {
                *a += b;
            }
        }
        Ok((per_filter.iter().sum(), grad))
    }
}

impl SmoothTerm for MrfPrior {
    fn value(&self, u: &[f64]) -> Result<f64> {
        Ok(self.evaluate(u, true, false)?.0)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(u, false, true)?.1)
    }

    fn value_and_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(u, true, true)
    }
}

/// `(f(u), ∇f(u))` of the MRF prior.
pub fn mrf_f_grad(u: &[f64], prior: &MrfPrior) -> Result<(f64, Vec<f64>)> {
    prior.value_and_gradient(u)
}

/// Power-iteration estimate of `‖K‖₂` for one filter on the prior's image size.
pub fn filter_operator_norm(filter: &Filter, height: usize, width: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d72_66);
    let mut v: Vec<f64> = (0..height * width).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut sigma2 = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nv = norm(&v);
        if nv == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let kv = filter.apply(&v, height, width)?;
        let ktkv = filter.adjoint(&kv, height, width)?;
        sigma2 = dot(&v, &ktkv);
        v = ktkv;
    }
    Ok(sigma2.max(0.0).sqrt())
}

/// `2 Σ_i θ_i ‖K_i‖²` with power-iteration norm estimates (`max |φ''| = 2`).
pub fn mrf_lipschitz_bound(prior: &MrfPrior) -> Result<f64> {
    let norms: Vec<f64> = prior
        .filters
        .par_iter()
        .map(|f| filter_operator_norm(f, prior.height, prior.width))
        .collect::<Result<_>>()?;
    Ok(2.0 * prior.weights.iter().zip(&norms).map(|(t, n)| t * n * n).sum::<f64>())
}

/// The data term `g`.
#[derive(Debug, Clone)]
pub enum DataTerm {
    /// `λ/2 ‖u − u0‖²`
    L2(WeightedQuadratic),
    /// `λ‖u − u0‖₁`
    L1(ShiftedL1),
}

impl DataTerm {
    pub fn l2(u0: Vec<f64>, lambda: f64) -> Self {
        DataTerm::L2(WeightedQuadratic::new(u0, lambda))
    }

    pub fn l1(u0: Vec<f64>, lambda: f64) -> Self {
        DataTerm::L1(ShiftedL1::new(u0, lambda))
    }

    pub fn u0(&self) -> &[f64] {
        match self {
            DataTerm::L2(t) => &t.u0,
            DataTerm::L1(t) => &t.u0,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            DataTerm::L2(t) => t.lambda,
            DataTerm::L1(t) => t.lambda,
        }
    }

    /// Starting point: the noisy image for ℓ2, zero for ℓ1.
    pub fn initial_point(&self) -> Vec<f64> {
        match self {
            DataTerm::L2(t) => t.u0.clone(),
            DataTerm::L1(t) => vec![0.0; t.u0.len()],
        }
    }
}

impl ConvexTerm for DataTerm {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            DataTerm::L2(t) => t.value(x),
            DataTerm::L1(t) => t.value(x),
        }
    }

    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        match self {
            DataTerm::L2(t) => t.prox(y, alpha),
            DataTerm::L1(t) => t.prox(y, alpha),
        }
    }

    fn description(&self) -> String {
        match self {
            DataTerm::L2(t) => t.description(),
            DataTerm::L1(t) => t.description(),
        }
    }
}

/// MRF denoising objective `f + g`.
pub type MrfModel = Composite<MrfPrior, DataTerm>;

pub fn mrf_model(prior: MrfPrior, data: DataTerm) -> Result<MrfModel> {
    check_len(prior.len(), data.u0().len())?;
    Ok(Composite::new(prior, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::grad_check;

    fn random(n: usize, seed: u64, scale: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn identity_filter_gradient_is_phi_prime() {
        let prior = MrfPrior::new(vec![Filter::identity()], vec![1.0], 4, 5).unwrap();
        let u = random(20, 1, 3.0);
        let (v, g) = mrf_f_grad(&u, &prior).unwrap();
        let expect: f64 = u.iter().map(|&t| (1.0 + t * t).ln()).sum();
        assert!((v - expect).abs() < 1e-12);
        for (gi, &t) in g.iter().zip(&u) {
            assert_eq!(*gi, phi_prime(t));
        }
    }

    #[test]
    fn zero_image_is_a_minimum() {
        let prior = MrfPrior::dct_subset(8, 8, 8).unwrap();
        let (v, g) = mrf_f_grad(&[0.0; 64], &prior).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for &(h, w) in &[(8, 8), (12, 9)] {
            let prior = MrfPrior::dct_subset(h, w, 8).unwrap();
            let u = random(h * w, 7, 2.0);
            let err = grad_check(
                |x| prior.value(x).unwrap(),
                |x| prior.gradient(x).unwrap(),
                &u,
                None,
            );
            assert!(err <= 1e-6, "{h}x{w}: {err}");
        }
    }

    #[test]
    fn grouped_evaluation_matches_per_filter_sum() {
        let (h, w) = (10, 13);
        let mut filters = dct_filter_bank(7);
        filters.push(Filter::dense(3, random(9, 3, 1.0)).unwrap());
        filters.push(Filter::separable(random(5, 4, 1.0), random(5, 5, 1.0)).unwrap());
        let weights = random(filters.len(), 6, 1.0).iter().map(|v| v.abs()).collect();
        let prior = MrfPrior::new(filters, weights, h, w).unwrap();
        let u = random(h * w, 8, 4.0);
        let (v, g) = mrf_f_grad(&u, &prior).unwrap();
        let (mut ev, mut eg) = (0.0, vec![0.0; h * w]);
        for (k, &theta) in prior.filters.iter().zip(&prior.weights) {
            let ku = k.apply(&u, h, w).unwrap();
            ev += theta * ku.iter().map(|&t| phi(t)).sum::<f64>();
            let d: Vec<f64> = ku.iter().map(|&t| theta * phi_prime(t)).collect();
            for (a, b) in eg.iter_mut().zip(k.adjoint(&d, h, w).unwrap()) {
                *a += b;
            }
        }
        assert!((v - ev).abs() <= 1e-12 * ev);
        for (a, b) in g.iter().zip(&eg) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        assert_eq!(prior.value(&u).unwrap(), v);
    }

    #[test]
    fn lipschitz_bound_examples() {
        let id = MrfPrior::new(vec![Filter::identity()], vec![1.0], 6, 6).unwrap();
        assert!((mrf_lipschitz_bound(&id).unwrap() - 2.0).abs() < 1e-12);
        let scaled = MrfPrior::new(vec![Filter::identity()], vec![3.5], 6, 6).unwrap();
        assert!((mrf_lipschitz_bound(&scaled).unwrap() - 7.0).abs() < 1e-12);
        let dct = MrfPrior::dct(16, 16).unwrap();
        assert!((mrf_lipschitz_bound(&dct).unwrap() - DEFAULT_MRF_LIPSCHITZ).abs() < 1e-9);
    }

    #[test]
    fn data_term_starts() {
        let u0 = vec![3.0, 4.0];
        assert_eq!(DataTerm::l2(u0.clone(), 0.1).initial_point(), u0);
        assert_eq!(DataTerm::l1(u0, 0.1).initial_point(), vec![0.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        assert!(MrfPrior::new(vec![Filter::identity()], vec![], 2, 2).is_err());
        assert!(MrfPrior::dct_subset(2, 2, 3).is_err());
        let prior = MrfPrior::dct_subset(8, 8, 2).unwrap();
        assert!(mrf_f_grad(&[0.0; 10], &prior).is_err());
        assert!(mrf_model(prior, DataTerm::l2(vec![0.0; 3], 1.0)).is_err());
    }
}
