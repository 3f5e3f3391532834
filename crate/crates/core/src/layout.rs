//! Index arithmetic for tensor-product Hilbert spaces.
//!
//! Basis states are ordered little-endian: site 0 is the fastest-varying
//! digit, so the flat index of `|n_0, n_1, ..., n_{N-1}>` is
//! `n_0 + d_0 * (n_1 + d_1 * (n_2 + ...))`.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteLayout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl SiteLayout {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = Vec::with_capacity(dims.len());
        let mut total = 1;
        for &d in dims {
            strides.push(total);
            total *= d;
        }
        SiteLayout { dims: dims.to_vec(), strides, total }
    }

    pub fn uniform(n_sites: usize, d: usize) -> Self {
        Self::new(&vec![d; n_sites])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    /// Occupation of `site` in basis state `index`.
    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.strides[site]) % self.dims[site]
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|s| self.digit(index, s)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    /// Occupation table `occ[site][index]`, handy in hot loops.
    pub fn occupation_table(&self) -> Vec<Vec<usize>> {
        (0..self.n_sites()).map(|s| (0..self.total).map(|i| self.digit(i, s)).collect()).collect()
    }

    /// Layout of the subsystem made of `sites` (kept in ascending order).
    pub fn restrict(&self, sites: &[usize]) -> SiteLayout {
        SiteLayout::new(&sites.iter().map(|&s| self.dims[s]).collect::<Vec<_>>())
    }

    /// Flat index of `index` projected onto `sites`, in the restricted layout.
    pub fn project(&self, index: usize, sites: &[usize], restricted: &SiteLayout) -> usize {
        sites.iter().enumerate().map(|(k, &s)| self.digit(index, s) * restricted.strides[k]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn little_endian_order() {
        let l = SiteLayout::new(&[2, 3, 2]);
        assert_eq!(l.dim(), 12);
        assert_eq!(l.index(&[1, 0, 0]), 1);
        assert_eq!(l.index(&[0, 1, 0]), 2);
        assert_eq!(l.index(&[0, 0, 1]), 6);
        for i in 0..l.dim() {
            assert_eq!(l.index(&l.digits(i)), i);
        }
    }

    #[test]
    fn projection() {
        let l = SiteLayout::uniform(3, 2);
        let sub = l.restrict(&[0, 2]);
        // |1,0,1> -> |1,1> in the kept pair
        assert_eq!(l.project(l.index(&[1, 0, 1]), &[0, 2], &sub), 3);
    }
}
