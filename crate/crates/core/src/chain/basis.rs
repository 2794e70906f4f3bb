//! Closed-form one-channel solutions with analytic derivatives of any order.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this `|kr|` the regular d-wave solution is summed as a power
/// series; the closed form cancels catastrophically near the origin.
const SERIES_RADIUS: f64 = 2.0;

/// Real background potential of one channel, `hbar^2 / 2mu = 1`.
#[derive(Clone)]
pub enum ChannelPotential {
    Free,
    /// `l (l + 1) / r^2`
    Centrifugal(u32),
    /// Tabulated or user-supplied potential: `(r, order) -> d^order v / dr^order`.
    Sampled { label: String, eval: Arc<dyn Fn(f64, usize) -> f64 + Send + Sync> },
}

impl fmt::Debug for ChannelPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Free => write!(f, "Free"),
            Self::Centrifugal(l) => write!(f, "Centrifugal({l})"),
            Self::Sampled { label, .. } => write!(f, "Sampled({label})"),
        }
    }
}

impl PartialEq for ChannelPotential {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Free, Self::Free) => true,
            (Self::Centrifugal(a), Self::Centrifugal(b)) => a == b,
            (Self::Sampled { eval: a, .. }, Self::Sampled { eval: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl ChannelPotential {
    pub fn value(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }

    pub fn derivative(&self, r: f64, order: usize) -> f64 {
        match self {
            Self::Free => 0.0,
            Self::Centrifugal(l) => {
                let c = (*l as f64) * (*l as f64 + 1.0);
                // d^p r^-2 = (-1)^p (p + 1)! r^-(p+2)
                let fact: f64 = (1..=order + 1).map(|v| v as f64).product();
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                c * sign * fact * r.powi(-(order as i32 + 2))
            }
            Self::Sampled { eval, .. } => eval(r, order),
        }
    }

    /// Angular momentum carried by the asymptotic form of the channel.
    pub fn angular_momentum(&self) -> Option<u32> {
        match self {
            Self::Free => Some(0),
            Self::Centrifugal(l) => Some(*l),
            Self::Sampled { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// `f_s(kr) = e^{ikr}`
    JostS,
    /// `f_d(kr) = e^{ikr} (1 + 3i/(kr) - 3/(kr)^2)`
    JostD,
    /// `phi_s(kr) = i sin(kr)`
    RegularS,
    /// `phi_d(kr) = i [(3 - k^2 r^2) sin(kr) - 3kr cos(kr)] / (kr)^2`
    RegularD,
    /// `e^{kr}`
    Exp,
    Sinh,
    Cosh,
    Custom,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::JostS => "jost_s",
            Self::JostD => "jost_d",
            Self::RegularS => "regular_s",
            Self::RegularD => "regular_d",
            Self::Exp => "exp",
            Self::Sinh => "sinh",
            Self::Cosh => "cosh",
            Self::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "jost_s" => Self::JostS,
            "jost_d" => Self::JostD,
            "regular_s" => Self::RegularS,
            "regular_d" => Self::RegularD,
            "exp" => Self::Exp,
            "sinh" => Self::Sinh,
            "cosh" => Self::Cosh,
            "custom" => Self::Custom,
            _ => return None,
        })
    }
}

/// User-supplied solution: `(r, order) -> d^order b / dr^order`.
#[derive(Clone)]
pub struct CustomBasis {
    pub eval: Arc<dyn Fn(f64, usize) -> Complex64 + Send + Sync>,
    pub spectral_value: Complex64,
    pub max_order: usize,
}

/// A one-channel solution `b` of `b'' = (v(r) - lambda) b`.
#[derive(Clone)]
pub struct BasisSolution {
    kind: BasisKind,
    k: Complex64,
    channel: ChannelPotential,
    custom: Option<CustomBasis>,
}

impl fmt::Debug for BasisSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(k = {}, {:?})", self.kind.name(), self.k, self.channel)
    }
}

impl PartialEq for BasisSolution {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.k == other.k
            && self.channel == other.channel
            && match (&self.custom, &other.custom) {
                (None, None) => true,
                (Some(a), Some(b)) => Arc::ptr_eq(&a.eval, &b.eval),
                _ => false,
            }
    }
}

/// Builds a closed-form basis solution. `k` is in fm^-1.
pub fn make_basis(kind: BasisKind, k: Complex64, channel: ChannelPotential) -> Result<BasisSolution> {
    let needs = match kind {
        BasisKind::JostD | BasisKind::RegularD => Some(2),
        BasisKind::Custom => {
            return Err(Error::Argument("custom basis solutions are built with BasisSolution::custom".into()))
        }
        _ => Some(0),
    };
    if channel.angular_momentum() != needs {
        return Err(Error::Argument(format!(
            "{} solutions need a {} channel, got {:?}",
            kind.name(),
            if needs == Some(2) { "centrifugal l = 2" } else { "free" },
            channel
        )));
    }
    if !k.re.is_finite() || !k.im.is_finite() {
        return Err(Error::Argument("wavenumber must be finite".into()));
    }
    if k.is_zero() {
        return Err(Error::Argument("wavenumber must be nonzero".into()));
    }
    Ok(BasisSolution { kind, k, channel, custom: None })
}

impl BasisSolution {
    pub fn custom(channel: ChannelPotential, custom: CustomBasis) -> Self {
        Self { kind: BasisKind::Custom, k: Complex64::zero(), channel, custom: Some(custom) }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn wavenumber(&self) -> Complex64 {
        self.k
    }

    pub fn channel(&self) -> &ChannelPotential {
        &self.channel
    }

    /// `lambda` in `-b'' + v b = lambda b`.
    pub fn spectral_value(&self) -> Complex64 {
        match self.kind {
            BasisKind::Exp | BasisKind::Sinh | BasisKind::Cosh => -self.k * self.k,
            BasisKind::Custom => self.custom.as_ref().map_or(Complex64::zero(), |c| c.spectral_value),
            _ => self.k * self.k,
        }
    }

    pub fn max_order(&self) -> usize {
        self.custom.as_ref().map_or(usize::MAX, |c| c.max_order)
    }

    /// Complex conjugate as a function of real `r`.
    pub fn conjugate(&self) -> Self {
        let mut out = self.clone();
        match self.kind {
            // conj b(k r) = b(-conj(k) r) for the oscillatory families
            BasisKind::JostS | BasisKind::JostD | BasisKind::RegularS | BasisKind::RegularD => {
                out.k = -self.k.conj();
            }
            BasisKind::Exp | BasisKind::Sinh | BasisKind::Cosh => out.k = self.k.conj(),
            BasisKind::Custom => {
                let c = self.custom.clone().expect("custom basis without closure");
                let eval = c.eval.clone();
                out.custom = Some(CustomBasis {
                    eval: Arc::new(move |r, p| eval(r, p).conj()),
                    spectral_value: c.spectral_value.conj(),
                    max_order: c.max_order,
                });
            }
        }
        out
    }

    pub fn value(&self, r: f64) -> Result<Complex64> {
        self.derivative(r, 0)
    }

    /// `d^order b / dr^order` at `r`.
    pub fn derivative(&self, r: f64, order: usize) -> Result<Complex64> {
        if let Some(c) = &self.custom {
            if order > c.max_order {
                return Err(Error::Capability { requested: order, supported: c.max_order });
            }
            return Ok((c.eval)(r, order));
        }
        let z = self.k * r;
        let g = match self.kind {
            BasisKind::JostS => I.powu(order as u32) * (I * z).exp(),
            BasisKind::Exp => z.exp(),
            BasisKind::Sinh => {
                if order % 2 == 0 {
                    z.sinh()
                } else {
                    z.cosh()
                }
            }
            BasisKind::Cosh => {
                if order % 2 == 0 {
                    z.cosh()
                } else {
                    z.sinh()
                }
            }
            BasisKind::RegularS => I * sin_derivative(z, order),
            BasisKind::JostD => {
                if z.is_zero() {
                    return Err(Error::Domain("d-wave Jost solution has a pole at kr = 0".into()));
                }
                jost_d_derivative(z, order)
            }
            BasisKind::RegularD => I * riccati_j2_derivative(z, order),
            BasisKind::Custom => unreachable!(),
        };
        Ok(self.k.powu(order as u32) * g)
    }
}

fn sin_derivative(z: Complex64, order: usize) -> Complex64 {
    match order % 4 {
        0 => z.sin(),
        1 => z.cos(),
        2 => -z.sin(),
        _ => -z.cos(),
    }
}

fn cos_derivative(z: Complex64, order: usize) -> Complex64 {
    sin_derivative(z, order + 1)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `d^q z^-n`.
fn inverse_power_derivative(z: Complex64, n: usize, q: usize) -> Complex64 {
    let rising: f64 = (0..q).map(|i| (n + i) as f64).product();
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    z.powi(-((n + q) as i32)) * (sign * rising)
}

fn jost_d_derivative(z: Complex64, order: usize) -> Complex64 {
    let e = (I * z).exp();
    (0..=order)
        .map(|q| {
            let rational = if q == 0 {
                Complex64::new(1.0, 0.0) + 3.0 * I / z - 3.0 / (z * z)
            } else {
                3.0 * I * inverse_power_derivative(z, 1, q) - 3.0 * inverse_power_derivative(z, 2, q)
            };
            binomial(order, q) * I.powu((order - q) as u32) * e * rational
        })
        .sum()
}

/// Derivatives of the Riccati-Bessel function `z j_2(z) = (3/z^2 - 1) sin z - 3 cos z / z`.
fn riccati_j2_derivative(z: Complex64, order: usize) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        return riccati_j2_series(z, order);
    }
    (0..=order)
        .map(|q| {
            let a = if q == 0 {
                3.0 * inverse_power_derivative(z, 2, 0) - 1.0
            } else {
                3.0 * inverse_power_derivative(z, 2, q)
            };
            binomial(order, q)
                * (a * sin_derivative(z, order - q) - 3.0 * inverse_power_derivative(z, 1, q) * cos_derivative(z, order - q))
        })
        .sum()
}

/// `z j_2(z) = sum_s c_s z^(2s+3)`, `c_s = (-1/2)^s / (s! (2s+5)!!)`.
fn riccati_j2_series(z: Complex64, order: usize) -> Complex64 {
    let mut c = 1.0 / 15.0;
    let mut sum = Complex64::zero();
    for s in 0..60usize {
        let power = 2 * s + 3;
        if power >= order {
            let falling: f64 = (0..order).map(|i| (power - i) as f64).product();
            let term = z.powu((power - order) as u32) * (c * falling);
            sum += term;
            if s > 2 && term.norm() < 1e-18 * sum.norm().max(1e-300) {
                break;
            }
        }
        c *= -0.5 / ((s + 1) as f64 * (2 * s + 7) as f64);
    }
    sum
}
