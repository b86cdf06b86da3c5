use serde::{Deserialize, Serialize};

/// Uniform cell-centred grid on `[xmin, xmax]` with `n` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(xmin: f64, xmax: f64, n: usize) -> Result<Self, String> {
        if !(xmin.is_finite() && xmax.is_finite() && xmin < xmax) {
            return Err(format!("grid needs finite xmin < xmax, got [{xmin}, {xmax}]"));
        }
        if n < 2 {
            return Err(format!("grid needs at least 2 cells, got {n}"));
        }
        Ok(Self { xmin, xmax, n })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.xmax - self.xmin) / self.n as f64
    }

    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        self.xmin + (j as f64 + 0.5) * self.dx()
    }

    /// Left edge of cell `e` (`e = n` is `xmax`).
    #[inline]
    pub fn edge(&self, e: usize) -> f64 {
        if e == self.n {
            self.xmax
        } else {
            self.xmin + e as f64 * self.dx()
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.center(j)).collect()
    }

    /// Cell containing `x`, if inside `[xmin, xmax)`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.xmin && x < self.xmax) {
            return None;
        }
        let j = ((x - self.xmin) / self.dx()) as usize;
        Some(j.min(self.n - 1))
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n
            && (self.xmin - other.xmin).abs() <= 1e-12 * self.dx()
            && (self.xmax - other.xmax).abs() <= 1e-12 * self.dx()
    }
}

/// Cell averages of a density at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityGrid {
    pub fn zeros(spec: GridSpec, time: f64) -> Self {
        Self { spec, values: vec![0.0; spec.n], time }
    }

    /// Cell averages of `pdf` by 4-point Gauss-Legendre on each cell.
    pub fn from_pdf<F: Fn(f64) -> f64>(spec: GridSpec, time: f64, pdf: F) -> Self {
        const G: [(f64, f64); 4] = [
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
            (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        ];
        let h = 0.5 * spec.dx();
        let values = (0..spec.n)
            .map(|j| {
                let c = spec.center(j);
                0.5 * G.iter().map(|(x, w)| w * pdf(c + h * x)).sum::<f64>()
            })
            .collect();
        Self { spec, values, time }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.dx()
    }

    /// `∫ x^k p dx` by the midpoint rule.
    pub fn moment(&self, k: i32) -> f64 {
        let dx = self.spec.dx();
        self.values.iter().enumerate().map(|(j, v)| v * self.spec.center(j).powi(k)).sum::<f64>() * dx
    }

    pub fn mean(&self) -> f64 {
        self.moment(1) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mass();
        let mu = self.moment(1) / m;
        self.moment(2) / m - mu * mu
    }

    /// Mass in cells whose centres satisfy `pred`.
    pub fn mass_where<F: Fn(f64) -> bool>(&self, pred: F) -> f64 {
        let dx = self.spec.dx();
        self.values.iter().enumerate().filter(|(j, _)| pred(self.spec.center(*j))).map(|(_, v)| v * dx).sum()
    }

    pub fn max_negativity(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(-v))
    }

    pub fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_cell_averages_have_unit_mass() {
        let spec = GridSpec::new(-8.0, 8.0, 400).unwrap();
        let p = DensityGrid::from_pdf(spec, 0.0, |x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt());
        assert!((p.mass() - 1.0).abs() < 1e-12);
        assert!((p.variance() - 1.0 - spec.dx().powi(2) / 12.0).abs() < 1e-8);
    }

    #[test]
    fn cell_lookup() {
        let spec = GridSpec::new(0.0, 1.0, 10).unwrap();
        assert_eq!(spec.cell_of(0.0), Some(0));
        assert_eq!(spec.cell_of(0.95), Some(9));
        assert_eq!(spec.cell_of(1.0), None);
        assert_eq!(spec.cell_of(-1e-9), None);
        assert_eq!(spec.edge(10), 1.0);
    }
}
