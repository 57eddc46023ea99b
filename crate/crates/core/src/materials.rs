//! Solid constitutive laws.
//!
//! Two models: small-deformation linear elasticity and Saint Venant-Kirchhoff
//! hyperelasticity. Each exposes the strain-energy density `W(F)`, the stress
//! `sigma(F) = dW/dF`, and the second-variation density used as the tangent
//! bilinear form in the semi-implicit solid update and in Newton iterations.
//!
//! Conventions: `F` is the deformation gradient, `E = (F^T F - I)/2` the
//! Green-Lagrange strain, `E_L = (F + F^T)/2 - I` its linearization. All
//! moduli are nondimensional.

use crate::Mat2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterialKind {
    LinearElastic,
    SaintVenantKirchhoff,
}

/// Solid material: kind plus the two moduli and the density.
#[derive(Debug, Clone, Copy)]
pub struct MaterialModel {
    pub kind: MaterialKind,
    pub mu_s: f64,
    pub lambda_s: f64,
    pub rho_s: f64,
}

impl MaterialModel {
    pub fn new(kind: MaterialKind, mu_s: f64, lambda_s: f64, rho_s: f64) -> Self {
        assert!(mu_s > 0.0 && lambda_s >= 0.0 && rho_s > 0.0, "invalid material moduli");
        MaterialModel { kind, mu_s, lambda_s, rho_s }
    }

    /// True when the strain energy is convex in F (linear elasticity).
    /// The Saint Venant-Kirchhoff energy is not convex.
    pub fn convex_energy(&self) -> bool {
        self.kind == MaterialKind::LinearElastic
    }

    /// Strain-energy density `W(F)`.
    pub fn strain_energy(&self, f: &Mat2) -> f64 {
        match self.kind {
            MaterialKind::SaintVenantKirchhoff => {
                let e = 0.5 * (f.transpose() * f - Mat2::identity());
                let tr = e.trace();
                self.mu_s * (e * e).trace() + 0.5 * self.lambda_s * tr * tr
            }
            MaterialKind::LinearElastic => {
                let el = 0.5 * (f + f.transpose()) - Mat2::identity();
                let tr = el.trace();
                self.mu_s * (el * el).trace() + 0.5 * self.lambda_s * tr * tr
            }
        }
    }

    /// First Piola-type stress `sigma(F) = dW/dF`.
    pub fn stress(&self, f: &Mat2) -> Mat2 {
        match self.kind {
            MaterialKind::SaintVenantKirchhoff => {
                let e = 0.5 * (f.transpose() * f - Mat2::identity());
                2.0 * self.mu_s * f * e + self.lambda_s * e.trace() * f
            }
            MaterialKind::LinearElastic => {
                let h = f - Mat2::identity();
                self.mu_s * (h + h.transpose()) + self.lambda_s * h.trace() * Mat2::identity()
            }
        }
    }

    /// Second-variation density `A_s(F; G, H)`, symmetric in (G, H); the
    /// pointwise integrand of the solid tangent form.
    pub fn linearization_density(&self, f: &Mat2, g: &Mat2, h: &Mat2) -> f64 {
        match self.kind {
            MaterialKind::SaintVenantKirchhoff => {
                let e = 0.5 * (f.transpose() * f - Mat2::identity());
                let hf = h.transpose() * f + f.transpose() * h;
                let gf = g.transpose() * f + f.transpose() * g;
                let hg = h.transpose() * g + g.transpose() * h;
                self.lambda_s * e.trace() * frob(h, g)
                    + 0.25 * self.lambda_s * hf.trace() * gf.trace()
                    + self.mu_s * frob(&e, &hg)
                    + 0.5 * self.mu_s * frob(&hf, &gf)
            }
            MaterialKind::LinearElastic => {
                let gs = g + g.transpose();
                let hs = h + h.transpose();
                0.5 * self.mu_s * frob(&gs, &hs) + self.lambda_s * g.trace() * h.trace()
            }
        }
    }
}

#[inline]
fn frob(a: &Mat2, b: &Mat2) -> f64 {
    a.m11 * b.m11 + a.m12 * b.m12 + a.m21 * b.m21 + a.m22 * b.m22
}
