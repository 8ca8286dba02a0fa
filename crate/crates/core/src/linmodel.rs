//! Linear-model data: random design ensembles, sparse ±1 signals, noisy
//! responses `y = X beta + sigma * g`, and CSV loading for real data.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::Cholesky;

/// Random design families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ensemble {
    GaussianIid,
    RademacherIid,
    ToeplitzGaussian,
}

impl Ensemble {
    pub fn name(self) -> &'static str {
        match self {
            Ensemble::GaussianIid => "gaussian",
            Ensemble::RademacherIid => "rademacher",
            Ensemble::ToeplitzGaussian => "toeplitz",
        }
    }
}

impl std::str::FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gaussian_iid" => Ok(Ensemble::GaussianIid),
            "rademacher" | "bernoulli" | "rademacher_iid" => Ok(Ensemble::RademacherIid),
            "toeplitz" | "toeplitz_gaussian" => Ok(Ensemble::ToeplitzGaussian),
            other => Err(invalid(format!("unknown design ensemble `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub ensemble: Ensemble,
    pub rows: usize,
    pub cols: usize,
    /// Toeplitz correlation; ignored by the i.i.d. ensembles.
    pub rho: f64,
}

impl DesignSpec {
    pub fn new(ensemble: Ensemble, rows: usize, cols: usize) -> Self {
        Self { ensemble, rows, cols, rho: 0.0 }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(invalid(format!(
                "design must have at least one row and column, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}

/// A sparse coefficient vector together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    pub beta: Array1<f64>,
    /// Sorted indices of the nonzero entries.
    pub support: Vec<usize>,
}

impl SparseSignal {
    /// Wraps an arbitrary coefficient vector; the support is its nonzero set.
    pub fn from_beta(beta: Array1<f64>) -> Self {
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { beta, support }
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }
}

/// Design matrix, response, noise level and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub sigma: f64,
    pub truth: Option<SparseSignal>,
}

impl LinearDataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>, sigma: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(invalid(format!(
                "response has {} entries but the design has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        Ok(Self { x, y, sigma, truth: None })
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn cols(&self) -> usize {
        self.x.ncols()
    }

    /// Subset of rows, keeping sigma and truth.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let x = self.x.select(ndarray::Axis(0), rows);
        let y = self.y.select(ndarray::Axis(0), rows);
        Self { x, y, sigma: self.sigma, truth: self.truth.clone() }
    }
}

/// `Sigma_{lm} = rho^{|l - m|}`.
pub fn toeplitz_covariance(dim: usize, rho: f64) -> Array2<f64> {
    Array2::from_shape_fn((dim, dim), |(l, m)| rho.powi(l.abs_diff(m) as i32))
}

pub fn generate_design<R: Rng + ?Sized>(spec: &DesignSpec, rng: &mut R) -> Result<Array2<f64>> {
    spec.validate()?;
    let (n, d) = (spec.rows, spec.cols);
    match spec.ensemble {
        Ensemble::GaussianIid => Ok(gaussian_matrix(n, d, rng)),
        Ensemble::RademacherIid => Ok(Array2::from_shape_simple_fn((n, d), || {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        })),
        Ensemble::ToeplitzGaussian => {
            if !(0.0..1.0).contains(&spec.rho) {
                return Err(Error::IllConditionedCovariance(format!(
                    "Toeplitz correlation must lie in [0, 1), got {}",
                    spec.rho
                )));
            }
            let sigma = toeplitz_covariance(d, spec.rho);
            let chol = Cholesky::factor(sigma.view()).ok_or_else(|| {
                Error::IllConditionedCovariance(format!(
                    "Cholesky failed for the {d}x{d} Toeplitz covariance with rho = {}",
                    spec.rho
                ))
            })?;
            let g = gaussian_matrix(n, d, rng);
            Ok(g.dot(&chol.lower().t()))
        }
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, d), || rng.sample(StandardNormal))
}

/// Random K-sparse signal with ±1 entries on a uniformly random support.
pub fn generate_signal<R: Rng + ?Sized>(dim: usize, k: usize, rng: &mut R) -> Result<SparseSignal> {
    if k == 0 || k > dim {
        return Err(invalid(format!("sparsity must satisfy 1 <= K <= D, got K = {k}, D = {dim}")));
    }
    let mut support = rand::seq::index::sample(rng, dim, k).into_vec();
    support.sort_unstable();
    let mut beta = Array1::zeros(dim);
    for &i in &support {
        beta[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    Ok(SparseSignal { beta, support })
}

/// Draws `X` from `spec` and responds with `y = X beta + sigma * g`.
pub fn generate_dataset<R: Rng + ?Sized>(
    spec: &DesignSpec,
    signal: &SparseSignal,
    sigma: f64,
    rng: &mut R,
) -> Result<LinearDataset> {
    if spec.cols != signal.dim() {
        return Err(invalid(format!(
            "design has {} columns but the signal has length {}",
            spec.cols,
            signal.dim()
        )));
    }
    let x = generate_design(spec, rng)?;
    respond(x, signal.clone(), sigma, rng)
}

fn respond<R: Rng + ?Sized>(
    x: Array2<f64>,
    signal: SparseSignal,
    sigma: f64,
    rng: &mut R,
) -> Result<LinearDataset> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("noise level must be nonnegative, got {sigma}")));
    }
    let mut y = x.dot(&signal.beta);
    if sigma > 0.0 {
        for v in y.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v += sigma * g;
        }
    }
    Ok(LinearDataset { x, y, sigma, truth: Some(signal) })
}

/// Plants a random K-sparse signal on a fixed (e.g. real) design.
pub fn semi_synthetic<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    k: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<LinearDataset> {
    let signal = generate_signal(x.ncols(), k, rng)?;
    respond(x.to_owned(), signal, sigma, rng)
}

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    /// Plain integers are column indices; anything else is a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(n) => write!(f, "`{n}`"),
            ColumnRef::Index(i) => write!(f, "#{i}"),
        }
    }
}

/// Loads a numeric CSV. The first row is a header iff any of its cells is non-numeric.
pub fn load_csv_dataset(
    path: &Path,
    response: &ColumnRef,
    standardize: bool,
) -> Result<LinearDataset> {
    let shown = path.display().to_string();
    let fail = |message: String| Error::Load { path: shown.clone(), message };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        rows.push(rec.map_err(|e| fail(e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(fail("file is empty".into()));
    }

    let header: Option<Vec<String>> = if rows[0].iter().any(|c| c.parse::<f64>().is_err()) {
        Some(rows.remove(0).iter().map(str::to_string).collect())
    } else {
        None
    };
    let width = header.as_ref().map_or_else(|| rows.first().map_or(0, |r| r.len()), Vec::len);
    if width < 2 {
        return Err(fail(format!("need at least two columns, found {width}")));
    }
    if rows.is_empty() {
        return Err(fail("no data rows".into()));
    }

    let target = match response {
        ColumnRef::Index(i) if *i < width => *i,
        ColumnRef::Index(i) => {
            return Err(fail(format!("response column #{i} out of range ({width} columns)")))
        }
        ColumnRef::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| fail(format!("response column `{name}` not found in header")))?,
    };

    let first_data_line = if header.is_some() { 2 } else { 1 };
    let n = rows.len();
    let mut x = Array2::zeros((n, width - 1));
    let mut y = Array1::zeros(n);
    for (r, rec) in rows.iter().enumerate() {
        let line = r + first_data_line;
        if rec.len() != width {
            return Err(fail(format!("line {line}: expected {width} fields, found {}", rec.len())));
        }
        let mut xc = 0;
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                fail(format!("line {line}, column {}: `{cell}` is not a number", c + 1))
            })?;
            if !v.is_finite() {
                return Err(fail(format!("line {line}, column {}: non-finite value", c + 1)));
            }
            if c == target {
                y[r] = v;
            } else {
                x[[r, xc]] = v;
                xc += 1;
            }
        }
    }

    if standardize {
        let names: Vec<String> = (0..width)
            .filter(|&c| c != target)
            .map(|c| header.as_ref().map_or_else(|| format!("#{c}"), |h| format!("`{}`", h[c])))
            .collect();
        standardize_columns(&mut x).map_err(|j| {
            fail(format!("column {} is constant and cannot be standardized", names[j]))
        })?;
    }
    Ok(LinearDataset { x, y, sigma: 0.0, truth: None })
}

/// Centers each column and scales it to unit sample standard deviation (N−1
/// denominator). On a constant column returns its index.
pub fn standardize_columns(x: &mut Array2<f64>) -> std::result::Result<(), usize> {
    let n = x.nrows();
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
        if !(sd > 0.0) {
            return Err(j);
        }
        col.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream;
    use ndarray::array;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn rademacher_entries_and_mean() {
        let spec = DesignSpec::new(Ensemble::RademacherIid, 100, 100);
        let x = generate_design(&spec, &mut stream(1)).unwrap();
        assert!(x.iter().all(|v| *v == 1.0 || *v == -1.0));
        assert!((x.mean().unwrap()).abs() < 0.05);
    }

    #[test]
    fn toeplitz_rejects_bad_rho() {
        let spec = DesignSpec::new(Ensemble::ToeplitzGaussian, 5, 3).with_rho(1.0);
        assert!(matches!(
            generate_design(&spec, &mut stream(0)),
            Err(Error::IllConditionedCovariance(_))
        ));
    }

    #[test]
    fn toeplitz_rho_zero_is_identity() {
        assert_eq!(toeplitz_covariance(3, 0.0), Array2::eye(3));
        // Identity factor: same stream gives the Gaussian draw exactly.
        let g = generate_design(&DesignSpec::new(Ensemble::GaussianIid, 4, 3), &mut stream(5)).unwrap();
        let t = generate_design(&DesignSpec::new(Ensemble::ToeplitzGaussian, 4, 3), &mut stream(5))
            .unwrap();
        assert_eq!(g, t);
    }

    #[test]
    fn signal_edge_cases() {
        let s = generate_signal(4, 4, &mut stream(2)).unwrap();
        assert_eq!(s.support, vec![0, 1, 2, 3]);
        assert!(s.beta.iter().all(|b| b.abs() == 1.0));
        let s = generate_signal(5, 1, &mut stream(2)).unwrap();
        assert_eq!(s.beta.iter().filter(|b| **b != 0.0).count(), 1);
        assert!(generate_signal(3, 4, &mut stream(2)).is_err());
        assert!(generate_signal(3, 0, &mut stream(2)).is_err());
    }

    #[test]
    fn noiseless_and_trivial_datasets() {
        let mut rng = stream(9);
        let sig = generate_signal(6, 2, &mut rng).unwrap();
        let spec = DesignSpec::new(Ensemble::GaussianIid, 20, 6);
        let ds = generate_dataset(&spec, &sig, 0.0, &mut rng).unwrap();
        assert_eq!(ds.y, ds.x.dot(&sig.beta));

        let zero = SparseSignal::from_beta(Array1::zeros(6));
        let ds = generate_dataset(&spec, &zero, 0.3, &mut rng).unwrap();
        assert!(ds.y.iter().all(|v| *v != 0.0));

        let ones = respond(Array2::ones((7, 1)), SparseSignal::from_beta(array![1.0]), 0.0, &mut rng)
            .unwrap();
        assert_eq!(ones.y, Array1::ones(7));

        let bad = DesignSpec::new(Ensemble::GaussianIid, 20, 5);
        assert!(generate_dataset(&bad, &sig, 0.0, &mut rng).is_err());
    }

    #[test]
    fn semi_synthetic_plants_requested_sparsity() {
        let x = generate_design(&DesignSpec::new(Ensemble::GaussianIid, 15, 5), &mut stream(4)).unwrap();
        let ds = semi_synthetic(x.view(), 1, 0.0, &mut stream(8)).unwrap();
        let t = ds.truth.as_ref().unwrap();
        assert_eq!(t.sparsity(), 1);
        let j = t.support[0];
        let col = x.column(j).to_owned() * t.beta[j];
        assert_eq!(ds.y, col);
    }

    #[test]
    fn csv_with_header() {
        let f = write_tmp("a,b,y\n1,0,2\n0,1,3\n1,1,5\n");
        let ds = load_csv_dataset(f.path(), &ColumnRef::Name("y".into()), false).unwrap();
        assert_eq!(ds.x, array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(ds.y, array![2.0, 3.0, 5.0]);
        assert!(ds.truth.is_none());
    }

    #[test]
    fn csv_without_header_by_index() {
        let f = write_tmp("2,1,0\n3,0,1\n");
        let ds = load_csv_dataset(f.path(), &ColumnRef::Index(0), false).unwrap();
        assert_eq!(ds.y, array![2.0, 3.0]);
        assert_eq!(ds.x, array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn csv_standardize() {
        let f = write_tmp("a,y\n1,0\n2,0\n3,0\n");
        let ds = load_csv_dataset(f.path(), &ColumnRef::Name("y".into()), true).unwrap();
        assert_eq!(ds.x.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_errors_are_located() {
        let f = write_tmp("a,b,y\n1,0,2\n");
        let e = load_csv_dataset(f.path(), &ColumnRef::Name("target".into()), false).unwrap_err();
        assert!(e.to_string().contains("`target`"), "{e}");

        let f = write_tmp("a,b,y\n1,0,2\n1,x,3\n");
        let e = load_csv_dataset(f.path(), &ColumnRef::Name("y".into()), false).unwrap_err();
        assert!(e.to_string().contains("line 3, column 2"), "{e}");

        let f = write_tmp("a,b,y\n1,0,2\n1,3\n");
        let e = load_csv_dataset(f.path(), &ColumnRef::Name("y".into()), false).unwrap_err();
        assert!(e.to_string().contains("expected 3 fields"), "{e}");

        let f = write_tmp("a,b,y\n1,0,2\n1,3,3\n");
        let e = load_csv_dataset(f.path(), &ColumnRef::Name("y".into()), true).unwrap_err();
        assert!(e.to_string().contains("`a` is constant"), "{e}");

        let e = load_csv_dataset(Path::new("/nonexistent/data.csv"), &ColumnRef::Index(0), false)
            .unwrap_err();
        assert!(matches!(e, Error::Load { .. }));
    }
}
