use serde::{Deserialize, Serialize};

use super::{LatticeError, Site};

/// Real-valued wave function supported on the ℓ¹-ball `|i| + |j| ≤ radius`.
///
/// Storage is packed by rows: row `i` holds the `2(radius - |i|) + 1` sites
/// `j = -(radius - |i|) ..= radius - |i|`, rows ordered from `i = -radius`
/// upward. The whole vector has `2r² + 2r + 1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiamondVector {
    radius: usize,
    values: Vec<f64>,
}

/// Number of sites in the diamond of the given radius.
pub const fn diamond_len(radius: usize) -> usize {
    2 * radius * radius + 2 * radius + 1
}

impl DiamondVector {
    pub fn zeros(radius: usize) -> Self {
        Self {
            radius,
            values: vec![0.0; diamond_len(radius)],
        }
    }

    /// Unit vector at `site`, stored on the smallest diamond containing it.
    pub fn delta(site: Site) -> Self {
        let mut v = Self::zeros(site.l1());
        let idx = v.index_of(site).expect("site lies on its own diamond");
        v.values[idx] = 1.0;
        v
    }

    pub fn from_fn(radius: usize, mut f: impl FnMut(Site) -> f64) -> Self {
        let mut values = Vec::with_capacity(diamond_len(radius));
        let r = radius as i64;
        for i in -r..=r {
            let h = r - i.abs();
            for j in -h..=h {
                values.push(f(Site::new(i, j)));
            }
        }
        Self { radius, values }
    }

    /// Wraps packed row-major diamond storage.
    pub fn from_values(radius: usize, values: Vec<f64>) -> Result<Self, LatticeError> {
        if values.len() != diamond_len(radius) {
            return Err(LatticeError::LengthMismatch {
                radius,
                expected: diamond_len(radius),
                actual: values.len(),
            });
        }
        Ok(Self { radius, values })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn row_start(&self, i: i64) -> usize {
        let r = self.radius as i64;
        let start = if i <= 0 {
            let t = i + r;
            t * t
        } else {
            (r + 1) * (r + 1) + (i - 1) * (2 * r + 1) - (i - 1) * i
        };
        start as usize
    }

    /// Half-width `radius - |i|` of row `i`.
    fn row_half_width(&self, i: i64) -> usize {
        (self.radius as i64 - i.abs()) as usize
    }

    /// Entries of row `i`, ordered by `j` ascending.
    ///
    /// Panics if `|i| > radius`.
    pub fn row(&self, i: i64) -> &[f64] {
        assert!(i.unsigned_abs() as usize <= self.radius, "row {i} outside diamond");
        let start = self.row_start(i);
        &self.values[start..start + 2 * self.row_half_width(i) + 1]
    }

    pub fn row_mut(&mut self, i: i64) -> &mut [f64] {
        assert!(i.unsigned_abs() as usize <= self.radius, "row {i} outside diamond");
        let start = self.row_start(i);
        let len = 2 * self.row_half_width(i) + 1;
        &mut self.values[start..start + len]
    }

    pub fn index_of(&self, site: Site) -> Option<usize> {
        if site.l1() > self.radius {
            return None;
        }
        let h = self.row_half_width(site.i) as i64;
        Some(self.row_start(site.i) + (site.j + h) as usize)
    }

    /// Value at `site`; zero outside the diamond.
    pub fn get(&self, site: Site) -> f64 {
        self.index_of(site).map_or(0.0, |idx| self.values[idx])
    }

    pub fn set(&mut self, site: Site, value: f64) -> Result<(), LatticeError> {
        let idx = self.index_of(site).ok_or(LatticeError::SiteOutsideDiamond {
            site,
            radius: self.radius,
        })?;
        self.values[idx] = value;
        Ok(())
    }

    /// Sites in storage order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let r = self.radius as i64;
        (-r..=r).flat_map(move |i| {
            let h = r - i.abs();
            (-h..=h).map(move |j| Site::new(i, j))
        })
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Euclidean inner product, treating both vectors as zero outside
    /// their diamonds.
    pub fn dot(&self, other: &DiamondVector) -> f64 {
        let (small, large) = if self.radius <= other.radius {
            (self, other)
        } else {
            (other, self)
        };
        // Row i of the larger diamond contains row i of the smaller one at a
        // fixed offset of (large.radius - small.radius).
        let offset = large.radius - small.radius;
        let rs = small.radius as i64;
        let mut acc = 0.0;
        for i in -rs..=rs {
            let a = small.row(i);
            let b = &large.row(i)[offset..offset + a.len()];
            acc += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        acc
    }

    /// `self += alpha * other`. Panics if `other` has a larger radius.
    pub fn add_scaled(&mut self, alpha: f64, other: &DiamondVector) {
        assert!(
            other.radius <= self.radius,
            "cannot accumulate radius {} into radius {}",
            other.radius,
            self.radius
        );
        let offset = self.radius - other.radius;
        let ro = other.radius as i64;
        for i in -ro..=ro {
            let src = other.row(i);
            let dst = &mut self.row_mut(i)[offset..offset + src.len()];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Copy of `self` on a diamond of at least the same radius.
    pub fn embed(&self, radius: usize) -> Result<DiamondVector, LatticeError> {
        if radius < self.radius {
            return Err(LatticeError::ShrinkingEmbed {
                from: self.radius,
                to: radius,
            });
        }
        let mut out = DiamondVector::zeros(radius);
        out.add_scaled(1.0, self);
        Ok(out)
    }

    /// Squared weight on the ℓ¹-shell `|i| + |j| = s`.
    pub fn shell_energy(&self, s: usize) -> Result<f64, LatticeError> {
        if s > self.radius {
            return Err(LatticeError::ShellOutOfRange {
                shell: s,
                radius: self.radius,
            });
        }
        let s = s as i64;
        let mut acc = 0.0;
        for i in -s..=s {
            let rest = s - i.abs();
            acc += self.get(Site::new(i, rest)).powi(2);
            if rest != 0 {
                acc += self.get(Site::new(i, -rest)).powi(2);
            }
        }
        Ok(acc)
    }

    /// All shell energies `0 ..= radius` in one pass over the storage.
    pub fn shell_energies(&self) -> Vec<f64> {
        let mut shells = vec![0.0; self.radius + 1];
        for (site, v) in self.sites().zip(&self.values) {
            shells[site.l1()] += v * v;
        }
        shells
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
