//! Transition densities by Fourier inversion, the limit densities `p_Λ` and
//! `p_η`, Monte-Carlo increment samplers and a small on-disk grid cache.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use realfft::RealFftPlanner;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};

use crate::error::{argument, numeric, unsupported, Error, Result};
use crate::levy_models::{
    generalized_inverse, EtaMeasure, Family, InverseOptions, JumpMeasure, LevyMeasure, LevyModel,
    PowerTerm, ScalarFunction, SphereFunction, SphereMeasure,
};
use crate::quadrature::sphere_area;
use crate::special::{isotropic_levy_constant, normal_cdf, one_minus_cos_moment, sphere_abs_moment};

/// `e^{-37} < 10^{-16}`: frequencies beyond the cutoff contribute below double precision.
pub const CUTOFF_EXPONENT: f64 = 37.0;

/// Grid construction parameters. Unset fields are chosen automatically.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Half-width of the spatial box.
    pub half_extent: Option<f64>,
    /// Lattice spacing.
    pub spacing: Option<f64>,
    /// Accepted `|mass - 1|` and tail-mass budget.
    pub mass_tol: Option<f64>,
    /// Length scale of the geometry the density will be integrated against;
    /// caps the spacing at `geometry_scale / 200`.
    pub geometry_scale: Option<f64>,
    /// Largest number of lattice points per axis.
    pub max_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { half_extent: None, spacing: None, mass_tol: None, geometry_scale: None, max_points: 1 << 24 }
    }
}

impl GridSpec {
    /// Default mass tolerance by dimension: `1e-6` on the line, looser on tensor grids.
    pub fn default_mass_tol(d: usize) -> f64 {
        match d {
            1 => 1e-6,
            2 => 1e-3,
            _ => 1e-2,
        }
    }

    fn mass_tol_for(&self, d: usize) -> f64 {
        self.mass_tol.unwrap_or_else(|| Self::default_mass_tol(d))
    }

    fn max_points_for(&self, d: usize) -> usize {
        match d {
            1 => self.max_points,
            2 => self.max_points.min(2048),
            _ => self.max_points.min(160),
        }
    }
}

/// A density tabulated on a uniform centred lattice.
///
/// In one dimension the lattice is `x_j = j·h`, `j = -n..=n`. In `d ≥ 2` each
/// axis carries `x_j = (j - n/2)·h`, `j = 0..n`, stored row-major with the last
/// coordinate fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub dim: usize,
    /// Points per axis (`2n + 1` in one dimension, `n` otherwise).
    pub points: usize,
    pub spacing: f64,
    pub values: Vec<f64>,
    pub mass: f64,
    pub t: f64,
    /// Most negative value before clipping at zero.
    pub clipped_min: f64,
    /// Estimated probability mass outside the lattice.
    pub tail_mass: f64,
    /// For a density living on a coordinate axis of a higher-dimensional space:
    /// `(ambient dimension, axis)`. The grid itself is one-dimensional.
    pub support_axis: Option<(usize, usize)>,
    pub label: String,
}

impl DensityGrid {
    fn offset(&self) -> f64 {
        if self.dim == 1 {
            -(((self.points - 1) / 2) as f64) * self.spacing
        } else {
            -((self.points / 2) as f64) * self.spacing
        }
    }

    /// Coordinate of lattice index `j` along every axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        self.offset() + j as f64 * self.spacing
    }

    pub fn half_extent(&self) -> f64 {
        -self.offset()
    }

    /// Iterate over `(x, p(x))` lattice pairs.
    pub fn nodes(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        let n = self.points;
        let d = self.dim;
        self.values.iter().enumerate().map(move |(idx, &v)| {
            let mut x = vec![0.0; d];
            let mut rem = idx;
            for k in (0..d).rev() {
                x[k] = self.coordinate(rem % n);
                rem /= n;
            }
            (x, v)
        })
    }

    /// `h^d Σ f(x_j) p(x_j)`.
    pub fn integrate<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F) -> f64 {
        let n = self.points;
        let d = self.dim;
        let w = self.spacing.powi(d as i32);
        self.values
            .par_iter()
            .enumerate()
            .map(|(idx, &v)| {
                if v == 0.0 {
                    return 0.0;
                }
                let mut x = [0.0; 3];
                let mut rem = idx;
                for k in (0..d).rev() {
                    x[k] = self.coordinate(rem % n);
                    rem /= n;
                }
                f(&x[..d]) * v
            })
            .sum::<f64>()
            * w
    }

    /// Multilinear interpolation; zero outside the lattice.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let n = self.points;
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for k in 0..d {
            let u = (x[k] - self.offset()) / self.spacing;
            if !(u >= 0.0 && u <= (n - 1) as f64) {
                return 0.0;
            }
            let i = (u.floor() as usize).min(n - 2);
            base[k] = i;
            frac[k] = u - i as f64;
        }
        let mut s = 0.0;
        for corner in 0..(1usize << d) {
            let mut idx = 0;
            let mut w = 1.0;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                idx = idx * n + base[k] + bit;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            }
            s += w * self.values[idx];
        }
        s
    }

    /// Cumulative distribution on the one-dimensional lattice (trapezoid rule).
    pub fn cdf_1d(&self) -> Result<Vec<(f64, f64)>> {
        if self.dim != 1 {
            return unsupported("cdf is only tabulated for one-dimensional grids");
        }
        let h = self.spacing;
        let mut acc = 0.5 * self.tail_mass;
        let mut out = Vec::with_capacity(self.points);
        out.push((self.coordinate(0), acc));
        for j in 1..self.points {
            acc += 0.5 * h * (self.values[j - 1] + self.values[j]);
            out.push((self.coordinate(j), acc));
        }
        Ok(out)
    }

    /// Writes `x1,..,xd,p` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        header.push("p".into());
        w.write_record(&header).map_err(csv_err)?;
        for (x, v) in self.nodes() {
            let mut rec: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
            rec.push(format!("{v:e}"));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(64 + 8 * self.values.len());
        b.extend_from_slice(b"LHDG1");
        for v in [self.dim as u64, self.points as u64] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.spacing, self.mass, self.t, self.clipped_min, self.tail_mass] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        let axis = self.support_axis.map(|(a, k)| [a as u64, k as u64]).unwrap_or([0, u64::MAX]);
        for v in axis {
            b.extend_from_slice(&v.to_le_bytes());
        }
        let label = self.label.as_bytes();
        b.extend_from_slice(&(label.len() as u64).to_le_bytes());
        b.extend_from_slice(label);
        for v in &self.values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    fn from_bytes(b: &[u8]) -> Option<Self> {
        let mut pos = 5;
        if b.get(..5)? != b"LHDG1" {
            return None;
        }
        let mut u = || {
            let v = u64::from_le_bytes(b.get(pos..pos + 8)?.try_into().ok()?);
            pos += 8;
            Some(v)
        };
        let dim = u()? as usize;
        let points = u()? as usize;
        let f = |v: u64| f64::from_bits(v);
        let (spacing, mass, t, clipped_min, tail_mass) = (f(u()?), f(u()?), f(u()?), f(u()?), f(u()?));
        let (a, k) = (u()?, u()?);
        let len = u()? as usize;
        let label = String::from_utf8(b.get(pos..pos + len)?.to_vec()).ok()?;
        pos += len;
        let total = points.checked_pow(dim as u32)?;
        let data = b.get(pos..pos + 8 * total)?;
        let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Some(DensityGrid {
            dim,
            points,
            spacing,
            values,
            mass,
            t,
            clipped_min,
            tail_mass,
            support_axis: if k == u64::MAX { None } else { Some((a as usize, k as usize)) },
            label,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Content-addressed cache of density grids.
#[derive(Clone, Debug)]
pub struct DensityCache {
    dir: PathBuf,
}

impl DensityCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DensityCache { dir: dir.into() }
    }

    /// SHA-256 over the model descriptor, `t` and the grid specification.
    pub fn key(model: &LevyModel, t: f64, spec: &GridSpec) -> String {
        let mut h = Sha256::new();
        h.update(format!("{model:?}|{:016x}|{spec:?}", t.to_bits()).as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.grid"))
    }

    pub fn load(&self, key: &str) -> Option<DensityGrid> {
        let mut f = fs::File::open(self.path(key)).ok()?;
        let mut b = Vec::new();
        f.read_to_end(&mut b).ok()?;
        DensityGrid::from_bytes(&b)
    }

    pub fn store(&self, key: &str, grid: &DensityGrid) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::File::create(&tmp)?.write_all(&grid.to_bytes())?;
        fs::rename(tmp, self.path(key))?;
        Ok(())
    }

    /// Returns the cached grid or computes and stores it.
    pub fn transition_density(&self, model: &LevyModel, t: f64, spec: &GridSpec) -> Result<DensityGrid> {
        let key = Self::key(model, t, spec);
        if let Some(g) = self.load(&key) {
            return Ok(g);
        }
        let g = transition_density(model, t, spec)?;
        self.store(&key, &g)?;
        Ok(g)
    }

    /// Deletes every cached grid.
    pub fn clear(&self) -> Result<()> {
        if self.dir.exists() {
            for e in fs::read_dir(&self.dir)? {
                let p = e?.path();
                if p.extension().is_some_and(|x| x == "grid") {
                    fs::remove_file(p)?;
                }
            }
        }
        Ok(())
    }
}

/// What the inversion routine needs to know about an exponent.
struct ExponentInfo<'a> {
    dim: usize,
    /// Real, even exponent including the time factor.
    exponent: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    /// `inf_{‖ξ‖=u}` of the exponent (time included).
    sphere_min: &'a dyn Fn(f64) -> f64,
    /// `sup_{‖ξ‖≤u}` of the exponent (time included).
    ball_max: &'a dyn Fn(f64) -> f64,
    /// Bound on `P(‖X‖ > x)`.
    tail: &'a dyn Fn(f64) -> f64,
    label: String,
    t: f64,
}

/// `p_t` of a symmetric model by Fourier inversion of `e^{-tψ}`.
pub fn transition_density(model: &LevyModel, t: f64, spec: &GridSpec) -> Result<DensityGrid> {
    if !(t > 0.0 && t.is_finite()) {
        return argument("transition density needs t > 0");
    }
    if !model.is_symmetric() {
        return unsupported("Fourier inversion is implemented for symmetric models only");
    }
    let d = model.dim();
    if d > 3 {
        return unsupported("gridded inversion is limited to d ≤ 3");
    }
    integrability_check(model)?;
    let tri = model.triplet()?;
    let lambda = tri.a.iter().step_by(d + 1).copied().fold(0.0, f64::max);
    let nu = tri.nu.clone();
    let exponent = |xi: &[f64]| t * model.psi_re(xi);
    let sphere_min = |u: f64| t * model.psi_sphere_min(u).unwrap_or(0.0);
    let ball_max = |u: f64| t * model.psi_star(u).unwrap_or(f64::INFINITY);
    let tail = move |x: f64| {
        let jumps = t * nu.tail_mass(d, x).unwrap_or(f64::INFINITY);
        let gauss = if lambda > 0.0 {
            let sigma = (2.0 * lambda * t).sqrt();
            2.0 * d as f64 * normal_cdf(-x / (sigma * (d as f64).sqrt()))
        } else {
            0.0
        };
        jumps + gauss
    };
    invert(
        &ExponentInfo {
            dim: d,
            exponent: &exponent,
            sphere_min: &sphere_min,
            ball_max: &ball_max,
            tail: &tail,
            label: format!("{model:?}"),
            t,
        },
        spec,
    )
}

/// Sampled version of the requirement `ψ(ξ)/log(1+‖ξ‖) → ∞`.
fn integrability_check(model: &LevyModel) -> Result<()> {
    let a = model.psi_sphere_min(1e6)?;
    let b = model.psi_sphere_min(1e12)?;
    if !(b / (1.0 + 1e12f64).ln() > 4.0 * a / (1.0 + 1e6f64).ln()) {
        return numeric(
            "ψ does not outgrow log(1+‖ξ‖) along some direction: the law has no bounded density \
             that Fourier inversion can resolve (use the Poisson-series or Monte-Carlo estimators)",
        );
    }
    Ok(())
}

/// `p_Λ`: inversion of `exp(-Λ(ξ/‖ξ‖)‖ξ‖^α)`.
pub fn p_lambda(lambda: &SphereFunction, alpha: f64, spec: &GridSpec) -> Result<DensityGrid> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return argument("p_Λ needs α in (0, 2]");
    }
    if lambda.degree().is_some_and(|g| (g - alpha).abs() > 1e-12) {
        return argument("Λ is homogeneous of a different degree than α");
    }
    let d = lambda.dim();
    let (lo, hi) = lambda.range_on_grid(512);
    if !(lo > 0.0) {
        return argument("Λ must be strictly positive on the sphere");
    }
    let exponent = |xi: &[f64]| lambda.extended(xi);
    let sphere_min = |u: f64| lo * 0.999 * u.powf(alpha);
    let ball_max = |u: f64| hi * 1.001 * u.powf(alpha);
    let tail = |x: f64| stable_tail_bound(d, alpha, hi, x);
    invert(
        &ExponentInfo {
            dim: d,
            exponent: &exponent,
            sphere_min: &sphere_min,
            ball_max: &ball_max,
            tail: &tail,
            label: format!("p_lambda(alpha={alpha}, {lambda:?})"),
            t: 1.0,
        },
        spec,
    )
}

/// `P(‖X‖ > x)` upper estimate for a stable law with exponent at most `scale ‖ξ‖^α`.
fn stable_tail_bound(d: usize, alpha: f64, scale: f64, x: f64) -> f64 {
    if alpha >= 2.0 {
        let sigma = (2.0 * scale).sqrt();
        return 2.0 * d as f64 * normal_cdf(-x / (sigma * (d as f64).sqrt()));
    }
    // Tail of the isotropic Lévy measure with the same scale: c_{d,α} σ(S) x^{-α} / α.
    2.0 * scale * isotropic_levy_constant(d, alpha) * sphere_area(d) * x.powf(-alpha) / alpha
}

/// `p_η` for a Theorem-3 limit measure.
pub fn p_eta(eta: &EtaMeasure, spec: &GridSpec) -> Result<DensityGrid> {
    let rho = eta.rho();
    let f = eta.exponent();
    if let Some(axis) = eta.support_axis() {
        let d = eta.dim();
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        let c = f.at(&e);
        let one_d = SphereFunction::constant(1, c, rho);
        let mut g = p_lambda(&one_d, rho, spec)?;
        g.support_axis = Some((d, axis));
        g.label = format!("p_eta(axis {axis}, {eta:?})");
        return Ok(g);
    }
    match eta {
        EtaMeasure::Spherical { .. } => {
            let mut g = p_lambda(&f, rho, spec)?;
            g.label = format!("p_eta({eta:?})");
            Ok(g)
        }
        EtaMeasure::Axes { dim, .. } if *dim == 1 => p_lambda(&f, rho, spec),
        EtaMeasure::Axes { .. } => p_lambda(&f, rho, spec).map_err(|_| {
            Error::Unsupported("limit measures spread over several axes need the full tensor grid, which failed".into())
        }),
    }
}

/// Smallest `R` with `f(R) ≥ level` for a non-decreasing `f` (doubling then bisection).
fn level_crossing(f: &dyn Fn(f64) -> f64, level: f64) -> Result<f64> {
    let mut hi = 1.0;
    let mut n = 0;
    while f(hi) < level {
        hi *= 2.0;
        n += 1;
        if n > 200 {
            return numeric(
                "frequency cutoff search exceeded its cap: the exponent grows too slowly at this t \
                 (use a larger t or a family with a closed-form density)",
            );
        }
    }
    let mut lo = if n == 0 { 0.0 } else { hi / 2.0 };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn invert(info: &ExponentInfo<'_>, spec: &GridSpec) -> Result<DensityGrid> {
    let d = info.dim;
    let mass_tol = spec.mass_tol_for(d);
    let r_cut = level_crossing(info.sphere_min, CUTOFF_EXPONENT)?;
    // Natural length scale: 1/u with exponent_max(u) = 1.
    let u1 = level_crossing(info.ball_max, 1.0)?;
    let ell = if u1 > 0.0 { 1.0 / u1 } else { 1.0 };
    let default_spacing_factor = if d == 1 { 0.05 } else { 0.1 };
    let mut h = spec.spacing.unwrap_or(f64::INFINITY).min(PI / r_cut);
    if spec.spacing.is_none() {
        if let Some(g) = spec.geometry_scale {
            h = h.min(g / 200.0).min(default_spacing_factor * ell);
        }
    }
    let extent = match spec.half_extent {
        Some(x) => x,
        None => {
            let mut x = if d == 1 { 30.0 } else { 12.0 } * ell;
            let mut n = 0;
            if (info.tail)(x) > 0.5 * mass_tol {
                while (info.tail)(x) > 0.5 * mass_tol {
                    x *= 2.0;
                    n += 1;
                    if n > 400 {
                        return numeric("could not find a grid extent with small enough tail mass");
                    }
                }
                let mut lo = x / 2.0;
                for _ in 0..40 {
                    let mid = 0.5 * (lo + x);
                    if (info.tail)(mid) > 0.5 * mass_tol {
                        lo = mid;
                    } else {
                        x = mid;
                    }
                }
            }
            x
        }
    };
    let max_pts = spec.max_points_for(d);
    let (points, h) = if d == 1 {
        let n = ((extent / h).ceil() as usize).max(16).next_power_of_two();
        if n > max_pts {
            return numeric(format!(
                "the density grid would need {n} points per half-axis (cap {max_pts}); \
                 use a larger t, a coarser spacing or a smaller extent"
            ));
        }
        (n, h)
    } else {
        let n = ((2.0 * extent / h).ceil() as usize).max(16).next_power_of_two();
        if n > max_pts {
            // Keep the extent and coarsen the spacing if that stays above the cutoff resolution.
            return numeric(format!(
                "the {d}-d density grid would need {n} points per axis (cap {max_pts}); \
                 use a larger t or a looser mass tolerance"
            ));
        }
        (n, h)
    };
    let mut grid = if d == 1 { invert_1d(info, points, h)? } else { invert_nd(info, points, h)? };
    let half = grid.half_extent();
    grid.tail_mass = (info.tail)(half).min(1.0);
    if (grid.mass - 1.0).abs() > mass_tol || grid.tail_mass > mass_tol {
        return numeric(format!(
            "density mass {} (tail estimate {:e}) misses the tolerance {:e}",
            grid.mass, grid.tail_mass, mass_tol
        ));
    }
    Ok(grid)
}

/// One-dimensional inversion `p(x) = π⁻¹ ∫_0^R cos(xξ) e^{-E(ξ)} dξ` by the
/// trapezoid rule evaluated as a DCT-I through a real FFT of the even extension.
fn invert_1d(info: &ExponentInfo<'_>, n: usize, h: f64) -> Result<DensityGrid> {
    let dxi = PI / (n as f64 * h);
    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(2 * n);
    let mut input = fft.make_input_vec();
    input[..=n].par_iter_mut().enumerate().for_each(|(k, v)| *v = (-(info.exponent)(&[k as f64 * dxi])).exp());
    for k in 1..n {
        input[2 * n - k] = input[k];
    }
    let mut out = fft.make_output_vec();
    fft.process(&mut input, &mut out).map_err(|e| Error::Numeric(e.to_string()))?;
    drop(input);
    let c = dxi / (2.0 * PI);
    let mut half: Vec<f64> = out.iter().take(n + 1).map(|z| z.re * c).collect();
    drop(out);
    let clipped_min = half.iter().copied().fold(0.0, f64::min);
    for v in half.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mut values = Vec::with_capacity(2 * n + 1);
    values.extend(half.iter().rev());
    values.extend(half.iter().skip(1));
    let mass = h * values.iter().sum::<f64>();
    Ok(DensityGrid {
        dim: 1,
        points: 2 * n + 1,
        spacing: h,
        values,
        mass,
        t: info.t,
        clipped_min,
        tail_mass: 0.0,
        support_axis: None,
        label: info.label.clone(),
    })
}

/// Tensor-grid inversion in two or three dimensions with a complex FFT per axis.
fn invert_nd(info: &ExponentInfo<'_>, n: usize, h: f64) -> Result<DensityGrid> {
    let d = info.dim;
    let dxi = 2.0 * PI / (n as f64 * h);
    let total = n.pow(d as u32);
    let half = (n / 2) as f64;
    // (-1)^k modulation centres the frequency lattice.
    let mut data: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut xi = [0.0; 3];
            let mut rem = idx;
            let mut parity = 0;
            for k in (0..d).rev() {
                let j = rem % n;
                rem /= n;
                xi[k] = (j as f64 - half) * dxi;
                parity += j;
            }
            let v = (-(info.exponent)(&xi[..d])).exp();
            Complex64::new(if parity % 2 == 0 { v } else { -v }, 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let lines: Vec<usize> = (0..total).filter(|&i| (i / stride).is_multiple_of(n)).collect();
        let results: Vec<Vec<Complex64>> = lines
            .par_iter()
            .map(|&start| {
                let mut buf: Vec<Complex64> = (0..n).map(|j| data[start + j * stride]).collect();
                fft.process(&mut buf);
                buf
            })
            .collect();
        for (&start, buf) in lines.iter().zip(results) {
            for (j, v) in buf.into_iter().enumerate() {
                data[start + j * stride] = v;
            }
        }
    }
    let c = (dxi / (2.0 * PI)).powi(d as i32);
    let mut clipped_min: f64 = 0.0;
    let values: Vec<f64> = data
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let mut rem = idx;
            let mut parity = 0;
            for _ in 0..d {
                parity += rem % n;
                rem /= n;
            }
            // The centring phase e^{-iπ d n/2} is one because n is a multiple of four.
            let v = if parity % 2 == 0 { z.re } else { -z.re } * c;
            clipped_min = clipped_min.min(v);
            v.max(0.0)
        })
        .collect();
    let mass = h.powi(d as i32) * values.iter().sum::<f64>();
    Ok(DensityGrid {
        dim: d,
        points: n,
        spacing: h,
        values,
        mass,
        t: info.t,
        clipped_min,
        tail_mass: 0.0,
        support_axis: None,
        label: info.label.clone(),
    })
}

/// One row of [`rescaled_density_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaledError {
    pub t: f64,
    /// `V⁻(1/t)`.
    pub scale: f64,
    pub sup_error: f64,
}

/// `sup_x |p_t(x / V⁻(1/t)) / V⁻(1/t)^d - p_Λ(x)|` over `x_grid` for each `t`.
pub fn rescaled_density_check(
    model: &LevyModel,
    v: &dyn ScalarFunction,
    limit: &DensityGrid,
    t_grid: &[f64],
    x_grid: &[Vec<f64>],
    spec: &GridSpec,
) -> Result<Vec<RescaledError>> {
    let d = model.dim();
    let mut out = Vec::new();
    for &t in t_grid {
        let s = generalized_inverse(v, 1.0 / t, &InverseOptions::default())?;
        let grid = transition_density(model, t, spec)?;
        let sup = x_grid
            .iter()
            .map(|x| {
                let y: Vec<f64> = x.iter().map(|c| c / s).collect();
                (grid.value_at(&y) / s.powi(d as i32) - limit.value_at(x)).abs()
            })
            .fold(0.0, f64::max);
        out.push(RescaledError { t, scale: s, sup_error: sup });
    }
    Ok(out)
}

/// Diagnostic ratio `p_t(0) · V⁻(1/t)^{-d}` (bounded above when the on-diagonal estimate holds).
pub fn on_diagonal_ratio(grid: &DensityGrid, v: &dyn ScalarFunction) -> Result<f64> {
    let s = generalized_inverse(v, 1.0 / grid.t, &InverseOptions::default())?;
    Ok(grid.value_at(&vec![0.0; grid.dim]) * s.powi(-(grid.dim as i32)))
}

// ---------------------------------------------------------------------------
// Sampling

/// Symmetric α-stable variate with `E e^{iξS} = e^{-|ξ|^α}` (Chambers–Mallows–Stuck).
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let z: f64 = rng.sample(StandardNormal);
        return z * std::f64::consts::SQRT_2;
    }
    let v = PI * (rng.gen::<f64>() - 0.5);
    let w: f64 = rng.sample(Exp1);
    if alpha == 1.0 {
        return v.tan();
    }
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Positive `a`-stable variate with `E e^{-sA} = e^{-s^a}`, `0 < a < 1` (Kanter).
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u = PI * rng.gen::<f64>();
    let e: f64 = rng.sample(Exp1);
    let zolotarev = (a * u).sin().powf(a / (1.0 - a)) * ((1.0 - a) * u).sin() / u.sin().powf(1.0 / (1.0 - a));
    (zolotarev / e).powf((1.0 - a) / a)
}

#[derive(Clone, Debug)]
enum Part {
    /// `N(0, 2λt I)`.
    Gaussian { lambda: f64 },
    /// Isotropic stable with exponent `scale ‖ξ‖^α`.
    Isotropic { alpha: f64, scale: f64 },
    /// One-dimensional stable along `direction` with exponent `scale |⟨ξ, direction⟩|^α`.
    Directional { alpha: f64, scale: f64, direction: Vec<f64> },
    Poisson { jumps: JumpMeasure },
    Drift { velocity: Vec<f64> },
}

/// Draws increments `X_t` of a model.
#[derive(Clone, Debug)]
pub struct Sampler {
    dim: usize,
    parts: Vec<Part>,
    atom_cdf: Vec<Vec<f64>>,
}

impl Sampler {
    pub fn new(model: &LevyModel) -> Result<Self> {
        let d = model.dim();
        let mut parts = Vec::new();
        collect_parts(model, &mut parts)?;
        let atom_cdf = parts
            .iter()
            .map(|p| match p {
                Part::Poisson { jumps: JumpMeasure::Atoms { weights, .. } } => {
                    let total: f64 = weights.iter().sum();
                    let mut acc = 0.0;
                    weights
                        .iter()
                        .map(|w| {
                            acc += w / total;
                            acc
                        })
                        .collect()
                }
                _ => Vec::new(),
            })
            .collect();
        Ok(Sampler { dim: d, parts, atom_cdf })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes one draw of `X_t` into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, t: f64, rng: &mut R, out: &mut [f64]) {
        let d = self.dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (pi, part) in self.parts.iter().enumerate() {
            match part {
                Part::Gaussian { lambda } => {
                    let s = (2.0 * lambda * t).sqrt();
                    for o in out.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *o += s * z;
                    }
                }
                Part::Isotropic { alpha, scale } => {
                    let c = (scale * t).powf(1.0 / alpha);
                    if d == 1 {
                        out[0] += c * symmetric_stable(*alpha, rng);
                    } else if *alpha == 2.0 {
                        for o in out.iter_mut() {
                            let z: f64 = rng.sample(StandardNormal);
                            *o += c * std::f64::consts::SQRT_2 * z;
                        }
                    } else {
                        // Sub-Gaussian representation: √A · N(0, 2I), A positive (α/2)-stable.
                        let a = positive_stable(alpha / 2.0, rng).sqrt() * std::f64::consts::SQRT_2 * c;
                        for o in out.iter_mut() {
                            let z: f64 = rng.sample(StandardNormal);
                            *o += a * z;
                        }
                    }
                }
                Part::Directional { alpha, scale, direction } => {
                    let s = (scale * t).powf(1.0 / alpha) * symmetric_stable(*alpha, rng);
                    for (o, u) in out.iter_mut().zip(direction) {
                        *o += s * u;
                    }
                }
                Part::Poisson { jumps } => {
                    let lam = jumps.total_mass() * t;
                    let n = if lam > 0.0 {
                        Poisson::new(lam).map(|p| p.sample(rng) as u64).unwrap_or(0)
                    } else {
                        0
                    };
                    for _ in 0..n {
                        match jumps {
                            JumpMeasure::Atoms { points, .. } => {
                                let u: f64 = rng.gen();
                                let cdf = &self.atom_cdf[pi];
                                let k = cdf.partition_point(|&c| c < u).min(points.len() - 1);
                                for (o, p) in out.iter_mut().zip(&points[k]) {
                                    *o += p;
                                }
                            }
                            JumpMeasure::Gaussian { mean, std, .. } => {
                                let nd = Normal::new(0.0, *std).expect("positive std");
                                for (o, m) in out.iter_mut().zip(mean) {
                                    *o += m + nd.sample(rng);
                                }
                            }
                        }
                    }
                }
                Part::Drift { velocity } => {
                    for (o, v) in out.iter_mut().zip(velocity) {
                        *o += v * t;
                    }
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        self.sample_into(t, rng, &mut v);
        v
    }
}

/// One draw of `X_t`. For repeated draws build a [`Sampler`] once.
pub fn sample_increment<R: Rng + ?Sized>(model: &LevyModel, t: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return argument("t must be non-negative");
    }
    Ok(Sampler::new(model)?.sample(t, rng))
}

fn collect_parts(model: &LevyModel, parts: &mut Vec<Part>) -> Result<()> {
    let d = model.dim();
    match model.family() {
        Family::Brownian { lambda } => parts.push(Part::Gaussian { lambda: *lambda }),
        Family::IsotropicStable { alpha, scale } => {
            if *alpha == 2.0 {
                parts.push(Part::Gaussian { lambda: *scale })
            } else {
                parts.push(Part::Isotropic { alpha: *alpha, scale: *scale })
            }
        }
        Family::ProductOfStables { alphas } => {
            for (k, &a) in alphas.iter().enumerate() {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                parts.push(Part::Directional { alpha: a, scale: 1.0, direction: e });
            }
        }
        Family::SphericalStableLike { sphere, profile } => {
            for term in &profile.terms {
                push_spherical(d, sphere, term, parts);
            }
        }
        Family::CompoundPoisson { jumps, .. } => {
            parts.push(Part::Poisson { jumps: jumps.clone() });
            push_drift(model, parts)?;
        }
        Family::FiniteVariation { nu, .. } => {
            push_measure(d, nu, parts)?;
            push_drift(model, parts)?;
        }
        Family::Superposition { parts: ps } => {
            for p in ps {
                collect_parts(p, parts)?;
            }
        }
    }
    Ok(())
}

fn push_drift(model: &LevyModel, parts: &mut Vec<Part>) -> Result<()> {
    let g0 = model.gamma0()?.ok_or_else(|| Error::Unsupported("drift of a non-finite-variation model".into()))?;
    if g0.iter().any(|v| *v != 0.0) {
        parts.push(Part::Drift { velocity: g0.iter().map(|v| -v).collect() });
    }
    Ok(())
}

fn push_spherical(d: usize, sphere: &SphereMeasure, term: &PowerTerm, parts: &mut Vec<Part>) {
    let k = one_minus_cos_moment(term.alpha);
    match sphere {
        SphereMeasure::Uniform { total_mass } => {
            let scale = term.coef * k * total_mass / sphere_area(d) * sphere_abs_moment(d, term.alpha);
            parts.push(Part::Isotropic { alpha: term.alpha, scale });
        }
        SphereMeasure::Atoms { directions, weights } => {
            // Antipodal atoms each contribute w K |⟨ξ,θ⟩|^α; a 1-D stable along θ carries both.
            for (th, w) in directions.iter().zip(weights) {
                parts.push(Part::Directional { alpha: term.alpha, scale: term.coef * k * w, direction: th.clone() });
            }
        }
    }
}

fn push_measure(d: usize, nu: &LevyMeasure, parts: &mut Vec<Part>) -> Result<()> {
    match nu {
        LevyMeasure::Zero => {}
        LevyMeasure::RadialPowerLaw { alpha, constant } => {
            parts.push(Part::Isotropic { alpha: *alpha, scale: constant / isotropic_levy_constant(d, *alpha) })
        }
        LevyMeasure::Spherical { sphere, profile } => {
            for term in &profile.terms {
                push_spherical(d, sphere, term, parts);
            }
        }
        LevyMeasure::AxesProduct { alphas, constants } => {
            for (k, (&a, &c)) in alphas.iter().zip(constants).enumerate() {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                parts.push(Part::Directional { alpha: a, scale: 2.0 * c * one_minus_cos_moment(a), direction: e });
            }
        }
        LevyMeasure::Finite(j) => parts.push(Part::Poisson { jumps: j.clone() }),
        LevyMeasure::Sum(ps) => {
            for p in ps {
                push_measure(d, p, parts)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_density_fidelity() {
        let m = LevyModel::brownian(1, 1.0).unwrap();
        let g = transition_density(&m, 1.0, &GridSpec::default()).unwrap();
        let sup = g
            .nodes()
            .map(|(x, p)| (p - (-x[0] * x[0] / 4.0).exp() / (4.0 * PI).sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-8, "{sup}");
        assert!((g.mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_in_two_dimensions_is_a_product() {
        let m = LevyModel::brownian(2, 1.0).unwrap();
        let g = transition_density(&m, 1.0, &GridSpec::default()).unwrap();
        let sup = g
            .nodes()
            .map(|(x, p)| (p - (-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp() / (4.0 * PI)).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-8, "{sup}");
        assert!((g.mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cauchy_density_fidelity() {
        let m = LevyModel::isotropic_stable(1, 1.0, 1.0).unwrap();
        let g = transition_density(&m, 1.0, &GridSpec::default()).unwrap();
        let sup = g.nodes().map(|(x, p)| (p - 1.0 / (PI * (1.0 + x[0] * x[0]))).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-8, "{sup}");
        assert!(g.tail_mass < 1e-6);
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = 0.75;
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| (-positive_stable(a, &mut rng)).exp()).sum::<f64>() / n as f64;
        assert!((mean - (-1f64).exp()).abs() < 5e-3, "{mean}");
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DensityCache::new(dir.path());
        let m = LevyModel::isotropic_stable(1, 1.5, 1.0).unwrap();
        let spec = GridSpec { half_extent: Some(50.0), mass_tol: Some(1e-2), ..Default::default() };
        let a = cache.transition_density(&m, 0.5, &spec).unwrap();
        let b = cache.load(&DensityCache::key(&m, 0.5, &spec)).unwrap();
        assert_eq!(a, b);
    }
}
