//! Scenario geometry, Rayleigh fading channels with distance path loss,
//! imperfect CSI and the Khatri-Rao cascade matrices used by the attacker.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{complex_gaussian_matrix, complex_gaussian_vector};
use crate::{Error, Result, C64};

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One of the three link families of the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    BsRis,
    RisUser(usize),
    BsUser(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    bs: Point,
    ris: Point,
    users: Vec<Point>,
    path_loss_exponent: f64,
}

impl ScenarioGeometry {
    /// Validates that there is at least one user, that every link has a
    /// strictly positive length and that the path-loss exponent is positive.
    pub fn new(bs: Point, ris: Point, users: Vec<Point>, path_loss_exponent: f64) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::DegenerateGeometry("at least one user is required".into()));
        }
        if !(path_loss_exponent > 0.0) || !path_loss_exponent.is_finite() {
            return Err(Error::Domain(format!(
                "path-loss exponent must be positive and finite, got {path_loss_exponent}"
            )));
        }
        let geometry = ScenarioGeometry {
            bs,
            ris,
            users,
            path_loss_exponent,
        };
        let links = std::iter::once(Link::BsRis)
            .chain((0..geometry.num_users()).flat_map(|k| [Link::RisUser(k), Link::BsUser(k)]));
        for link in links {
            let d = geometry.distance(link)?;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::DegenerateGeometry(format!(
                    "link {link:?} has length {d}"
                )));
            }
        }
        Ok(geometry)
    }

    pub fn bs(&self) -> Point {
        self.bs
    }

    pub fn ris(&self) -> Point {
        self.ris
    }

    pub fn users(&self) -> &[Point] {
        &self.users
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    fn user(&self, k: usize) -> Result<Point> {
        self.users.get(k).copied().ok_or_else(|| {
            Error::Dimension(format!("user index {k} out of range for {} users", self.users.len()))
        })
    }

    /// Euclidean length of `link` in meters.
    pub fn distance(&self, link: Link) -> Result<f64> {
        Ok(match link {
            Link::BsRis => self.bs.distance(&self.ris),
            Link::RisUser(k) => self.ris.distance(&self.user(k)?),
            Link::BsUser(k) => self.bs.distance(&self.user(k)?),
        })
    }
}

/// Large-scale power gain `d^-eta` of `link`.
pub fn path_loss(geometry: &ScenarioGeometry, link: Link) -> Result<f64> {
    let d = geometry.distance(link)?;
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!("link {link:?} has zero length")));
    }
    Ok(d.powf(-geometry.path_loss_exponent))
}

/// Per-link average power of every channel entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    pub bs_user: Vec<f64>,
    pub bs_ris: f64,
    pub ris_user: Vec<f64>,
}

impl LinkGains {
    pub fn from_geometry(geometry: &ScenarioGeometry) -> Result<Self> {
        let k = geometry.num_users();
        Ok(LinkGains {
            bs_user: (0..k)
                .map(|k| path_loss(geometry, Link::BsUser(k)))
                .collect::<Result<_>>()?,
            bs_ris: path_loss(geometry, Link::BsRis)?,
            ris_user: (0..k)
                .map(|k| path_loss(geometry, Link::RisUser(k)))
                .collect::<Result<_>>()?,
        })
    }
}

/// True channels of one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Direct BS-user channels `h_k`, each of length `M`.
    pub h: Vec<DVector<C64>>,
    /// BS-RIS channel `G`, `L x M`.
    pub g: DMatrix<C64>,
    /// RIS-user channels `f_k`, each of length `L`.
    pub f: Vec<DVector<C64>>,
    pub gains: LinkGains,
}

impl ChannelRealization {
    pub fn num_antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    pub fn num_elements(&self) -> usize {
        self.g.nrows()
    }
}

/// Draws i.i.d. Rayleigh fading for every link, with per-entry variance equal
/// to the link path loss.
///
/// Draw order is `h_1..h_K`, then `G` row by row, then `f_1..f_K`.
pub fn draw_channels<R: Rng + ?Sized>(
    geometry: &ScenarioGeometry,
    antennas: usize,
    elements: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if antennas < 1 || elements < 1 {
        return Err(Error::Dimension(format!(
            "need M >= 1 and L >= 1, got M = {antennas}, L = {elements}"
        )));
    }
    let gains = LinkGains::from_geometry(geometry)?;
    let h = gains
        .bs_user
        .iter()
        .map(|&pl| complex_gaussian_vector(rng, antennas, pl))
        .collect();
    let g = complex_gaussian_matrix(rng, elements, antennas, gains.bs_ris);
    let f = gains
        .ris_user
        .iter()
        .map(|&pl| complex_gaussian_vector(rng, elements, pl))
        .collect();
    Ok(ChannelRealization { h, g, f, gains })
}

/// Gauss-Markov CSI error levels of the three link families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsiErrorSpec {
    pub tau_bs_u: f64,
    pub tau_bs_ris: f64,
    pub tau_ris_u: f64,
}

impl CsiErrorSpec {
    pub const PERFECT: CsiErrorSpec = CsiErrorSpec {
        tau_bs_u: 0.0,
        tau_bs_ris: 0.0,
        tau_ris_u: 0.0,
    };

    /// Same error level on every link.
    pub fn uniform(tau: f64) -> Self {
        CsiErrorSpec {
            tau_bs_u: tau,
            tau_bs_ris: tau,
            tau_ris_u: tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [
            ("tau_bs_u", self.tau_bs_u),
            ("tau_bs_ris", self.tau_bs_ris),
            ("tau_ris_u", self.tau_ris_u),
        ] {
            if !(0.0..=1.0).contains(&tau) {
                return Err(Error::Domain(format!("{name} = {tau} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Largest of the three levels; equals the common value for uniform specs.
    pub fn worst(&self) -> f64 {
        self.tau_bs_u.max(self.tau_bs_ris).max(self.tau_ris_u)
    }
}

/// Variance of the estimation error entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorScaling {
    /// Error entries share the link path loss, so the estimate keeps the
    /// average power of the true channel.
    #[default]
    PathLoss,
    /// Unit-variance error entries regardless of the link.
    Unit,
}

/// Imperfect copy of a [`ChannelRealization`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: Vec<DVector<C64>>,
    pub g_hat: DMatrix<C64>,
    pub f_hat: Vec<DVector<C64>>,
}

impl ChannelEstimate {
    /// The estimate that coincides with the truth.
    pub fn exact(truth: &ChannelRealization) -> Self {
        ChannelEstimate {
            h_hat: truth.h.clone(),
            g_hat: truth.g.clone(),
            f_hat: truth.f.clone(),
        }
    }
}

fn corrupt_vector<R: Rng + ?Sized>(
    truth: &DVector<C64>,
    tau: f64,
    variance: f64,
    rng: &mut R,
) -> DVector<C64> {
    let z = complex_gaussian_vector(rng, truth.len(), variance);
    let keep = (1.0 - tau * tau).sqrt();
    truth.map(|x| x * keep)
        .zip_map(&z, |x, e| x + e * tau)
}

/// `sqrt(1 - tau^2) * truth + tau * error` on every link.
///
/// The error draws are consumed in the same order as [`draw_channels`] and
/// are drawn even when `tau = 0`, so changing the error level never shifts the
/// stream. With every `tau = 0` the estimate equals the truth bit for bit.
pub fn corrupt_csi<R: Rng + ?Sized>(
    truth: &ChannelRealization,
    spec: &CsiErrorSpec,
    scaling: ErrorScaling,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    spec.validate()?;
    let variance = |pl: f64| match scaling {
        ErrorScaling::PathLoss => pl,
        ErrorScaling::Unit => 1.0,
    };
    let h_hat = truth
        .h
        .iter()
        .zip(&truth.gains.bs_user)
        .map(|(h, &pl)| corrupt_vector(h, spec.tau_bs_u, variance(pl), rng))
        .collect();
    let z = complex_gaussian_matrix(
        rng,
        truth.g.nrows(),
        truth.g.ncols(),
        variance(truth.gains.bs_ris),
    );
    let keep = (1.0 - spec.tau_bs_ris * spec.tau_bs_ris).sqrt();
    let g_hat = truth
        .g
        .map(|x| x * keep)
        .zip_map(&z, |x, e| x + e * spec.tau_bs_ris);
    let f_hat = truth
        .f
        .iter()
        .zip(&truth.gains.ris_user)
        .map(|(f, &pl)| corrupt_vector(f, spec.tau_ris_u, variance(pl), rng))
        .collect();
    Ok(ChannelEstimate { h_hat, g_hat, f_hat })
}

/// Per-user cascade matrices `K_k = G^T ⋄ f_k^H` (`M x L`), so that
/// `K_k θ = (f_k^H diag(θ) G)^T` for every reflection vector `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeMatrix {
    pub per_user: Vec<DMatrix<C64>>,
}

impl CascadeMatrix {
    pub fn num_users(&self) -> usize {
        self.per_user.len()
    }

    /// `(M, L)` of every per-user block.
    pub fn block_shape(&self) -> (usize, usize) {
        self.per_user
            .first()
            .map(|k| k.shape())
            .unwrap_or((0, 0))
    }
}

/// Column-wise Khatri-Rao product of `G^T` (`M x L`) with the single row
/// `f_k^H`: column `l` of `K_k` is `G[l, :]^T * conj(f_k[l])`.
pub fn cascade(estimate: &ChannelEstimate) -> Result<CascadeMatrix> {
    let (elements, antennas) = estimate.g_hat.shape();
    let per_user = estimate
        .f_hat
        .iter()
        .enumerate()
        .map(|(k, f)| {
            if f.len() != elements {
                return Err(Error::Dimension(format!(
                    "f_{k} has length {}, G has {elements} rows",
                    f.len()
                )));
            }
            Ok(DMatrix::from_fn(antennas, elements, |m, l| {
                estimate.g_hat[(l, m)] * f[l].conj()
            }))
        })
        .collect::<Result<_>>()?;
    Ok(CascadeMatrix { per_user })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn reference_geometry() -> ScenarioGeometry {
        ScenarioGeometry::new(
            Point::new(0.0, 0.0),
            Point::new(40.0, 5.0),
            vec![Point::new(30.0, 15.0), Point::new(50.0, 15.0), Point::new(55.0, 10.0)],
            2.5,
        )
        .unwrap()
    }

    #[test]
    fn path_loss_examples() {
        let geo = reference_geometry();
        let d = geo.distance(Link::BsUser(0)).unwrap();
        assert!((d - 1125f64.sqrt()).abs() < 1e-12);
        assert!((d - 33.5410).abs() < 1e-4);
        let pl = path_loss(&geo, Link::BsUser(0)).unwrap();
        assert!((pl - 1125f64.powf(-1.25)).abs() < 1e-18);
        assert!((pl - 1.5348e-4).abs() < 1e-8);
        assert!((geo.distance(Link::BsRis).unwrap() - 40.3113).abs() < 1e-4);

        let unit = ScenarioGeometry::new(
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            vec![Point::new(1.0, 0.0)],
            3.7,
        )
        .unwrap();
        assert_eq!(path_loss(&unit, Link::BsRis).unwrap(), 1.0);
        assert_eq!(path_loss(&unit, Link::BsUser(0)).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let err = ScenarioGeometry::new(
            Point::new(0.0, 0.0),
            Point::new(40.0, 5.0),
            vec![Point::new(0.0, 0.0)],
            2.5,
        );
        assert!(matches!(err, Err(Error::DegenerateGeometry(_))));
        let err = ScenarioGeometry::new(Point::new(0.0, 0.0), Point::new(1.0, 5.0), vec![], 2.5);
        assert!(err.is_err());
        let err = ScenarioGeometry::new(
            Point::new(0.0, 0.0),
            Point::new(1.0, 5.0),
            vec![Point::new(3.0, 3.0)],
            0.0,
        );
        assert!(matches!(err, Err(Error::Domain(_))));
        assert!(path_loss(&reference_geometry(), Link::RisUser(3)).is_err());
    }

    #[test]
    fn draw_is_deterministic_and_shaped() {
        let geo = reference_geometry();
        let a = draw_channels(&geo, 10, 16, &mut stream(5, &[1])).unwrap();
        let b = draw_channels(&geo, 10, 16, &mut stream(5, &[1])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_antennas(), 10);
        assert_eq!(a.num_elements(), 16);
        assert_eq!(a.num_users(), 3);
        assert!(a.f.iter().all(|f| f.len() == 16));
        assert!(draw_channels(&geo, 0, 16, &mut stream(5, &[1])).is_err());
        assert!(draw_channels(&geo, 4, 0, &mut stream(5, &[1])).is_err());
    }

    #[test]
    fn direct_channel_power_matches_path_loss() {
        let geo = reference_geometry();
        let mut rng = stream(11, &[]);
        let expected = path_loss(&geo, Link::BsUser(1)).unwrap();
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let ch = draw_channels(&geo, 1, 1, &mut rng).unwrap();
            acc += ch.h[1][0].norm_sqr();
        }
        let mean = acc / draws as f64;
        assert!((mean - expected).abs() < 0.02 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn huge_exponent_vanishes() {
        let geo = ScenarioGeometry::new(
            Point::new(0.0, 0.0),
            Point::new(4.0, 3.0),
            vec![Point::new(10.0, 0.0)],
            120.0,
        )
        .unwrap();
        let ch = draw_channels(&geo, 4, 4, &mut stream(1, &[])).unwrap();
        let max = ch
            .h
            .iter()
            .chain(&ch.f)
            .flat_map(|v| v.iter())
            .chain(ch.g.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(max < 1e-30, "{max}");
    }

    #[test]
    fn perfect_csi_is_bit_identical() {
        let geo = reference_geometry();
        let truth = draw_channels(&geo, 10, 20, &mut stream(2, &[])).unwrap();
        let est =
            corrupt_csi(&truth, &CsiErrorSpec::PERFECT, ErrorScaling::PathLoss, &mut stream(3, &[]))
                .unwrap();
        assert_eq!(est, ChannelEstimate::exact(&truth));
    }

    #[test]
    fn tau_out_of_range_is_rejected() {
        let geo = reference_geometry();
        let truth = draw_channels(&geo, 4, 4, &mut stream(2, &[])).unwrap();
        let spec = CsiErrorSpec {
            tau_bs_u: 0.1,
            tau_bs_ris: 1.2,
            tau_ris_u: 0.0,
        };
        assert!(matches!(
            corrupt_csi(&truth, &spec, ErrorScaling::PathLoss, &mut stream(3, &[])),
            Err(Error::Domain(_))
        ));
        assert!(CsiErrorSpec::uniform(-0.1).validate().is_err());
    }

    /// Sample correlation coefficient between paired complex samples,
    /// `|E[x conj(y)]| / sqrt(E|x|^2 E|y|^2)`.
    fn correlation(pairs: &[(C64, C64)]) -> f64 {
        let cross: C64 = pairs.iter().map(|(x, y)| x * y.conj()).sum();
        let px: f64 = pairs.iter().map(|(x, _)| x.norm_sqr()).sum();
        let py: f64 = pairs.iter().map(|(_, y)| y.norm_sqr()).sum();
        cross.norm() / (px * py).sqrt()
    }

    fn sample_pairs(tau: f64, draws: usize) -> Vec<(C64, C64)> {
        let geo = reference_geometry();
        let mut fading = stream(21, &[]);
        let mut noise = stream(22, &[]);
        let spec = CsiErrorSpec::uniform(tau);
        (0..draws)
            .map(|_| {
                let truth = draw_channels(&geo, 1, 1, &mut fading).unwrap();
                let est = corrupt_csi(&truth, &spec, ErrorScaling::PathLoss, &mut noise).unwrap();
                (truth.h[0][0], est.h_hat[0][0])
            })
            .collect()
    }

    #[test]
    fn correlation_follows_gauss_markov_model() {
        let expected = (1.0 - 0.09f64).sqrt();
        let rho = correlation(&sample_pairs(0.3, 100_000));
        assert!((rho - expected).abs() < 0.01 * expected, "{rho} vs {expected}");
    }

    #[test]
    fn full_error_is_uncorrelated() {
        let rho = correlation(&sample_pairs(1.0, 10_000));
        assert!(rho < 0.02, "{rho}");
    }

    #[test]
    fn estimate_preserves_average_power() {
        let pairs = sample_pairs(0.6, 100_000);
        let truth: f64 = pairs.iter().map(|(x, _)| x.norm_sqr()).sum();
        let est: f64 = pairs.iter().map(|(_, y)| y.norm_sqr()).sum();
        assert!((est - truth).abs() < 0.02 * truth, "{est} vs {truth}");
    }

    #[test]
    fn unit_scaling_ignores_path_loss() {
        let geo = reference_geometry();
        let truth = draw_channels(&geo, 64, 8, &mut stream(2, &[])).unwrap();
        let est = corrupt_csi(&truth, &CsiErrorSpec::uniform(1.0), ErrorScaling::Unit, &mut stream(9, &[]))
            .unwrap();
        let power = est.h_hat[0].norm_squared() / 64.0;
        assert!(power > 0.5 && power < 1.5, "{power}");
    }

    /// Direct evaluation of `f^H diag(θ) G` as a row vector.
    fn reflected_row(g: &DMatrix<C64>, f: &DVector<C64>, theta: &DVector<C64>) -> DVector<C64> {
        let theta_diag = DMatrix::from_diagonal(theta);
        (f.adjoint() * theta_diag * g).transpose()
    }

    #[test]
    fn scalar_cascade() {
        let g = C64::new(0.3, -1.2);
        let phi = C64::new(-0.7, 0.4);
        let psi = 0.9f64;
        let est = ChannelEstimate {
            h_hat: vec![DVector::from_element(1, C64::new(1.0, 0.0))],
            g_hat: DMatrix::from_element(1, 1, g),
            f_hat: vec![DVector::from_element(1, phi)],
        };
        let k = cascade(&est).unwrap();
        let theta = DVector::from_element(1, C64::from_polar(1.0, psi));
        let out = &k.per_user[0] * &theta;
        let expected = phi.conj() * C64::from_polar(1.0, psi) * g;
        assert!((out[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn cascade_matches_direct_product() {
        let geo = reference_geometry();
        let mut rng = stream(4, &[]);
        let truth = draw_channels(&geo, 3, 4, &mut rng).unwrap();
        let est = ChannelEstimate::exact(&truth);
        let k = cascade(&est).unwrap();
        assert_eq!(k.block_shape(), (3, 4));
        for (m, l) in [(0, 0), (2, 3), (1, 2)] {
            assert_eq!(k.per_user[1][(m, l)], est.g_hat[(l, m)] * est.f_hat[1][l].conj());
        }
        let phases = crate::linalg::complex_gaussian_vector(&mut rng, 4, 1.0)
            .map(|z| C64::from_polar(1.0, z.arg()));
        for user in 0..3 {
            let lhs = &k.per_user[user] * &phases;
            let rhs = reflected_row(&est.g_hat, &est.f_hat[user], &phases);
            assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm());
        }
        let ones = DVector::from_element(4, C64::new(1.0, 0.0));
        let lhs = &k.per_user[0] * &ones;
        let rhs = (est.f_hat[0].adjoint() * &est.g_hat).transpose();
        assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm());
    }

    #[test]
    fn cascade_rejects_shape_mismatch() {
        let est = ChannelEstimate {
            h_hat: vec![DVector::zeros(2)],
            g_hat: DMatrix::zeros(3, 2),
            f_hat: vec![DVector::zeros(4)],
        };
        assert!(matches!(cascade(&est), Err(Error::Dimension(_))));
    }
}
