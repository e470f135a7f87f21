use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Measured selective spin-hopping couplings of the five active ions in a
/// seven-ion chain, in kHz. The control qubit is the central ion.
pub const SEVEN_ION_COUPLINGS_KHZ: &str = "\
# units: kHz
0,2.25e-4,0.398,1.07e-4,1.15e-4
2.25e-4,0,0.402,1.03e-4,1.07e-4
0.398,0.402,0,0.402,0.398
1.07e-4,1.03e-4,0.402,0,2.25e-4
1.15e-4,1.07e-4,0.398,2.25e-4,0
";

/// Row of the control qubit in [`SEVEN_ION_COUPLINGS_KHZ`].
pub const SEVEN_ION_CONTROL: usize = 2;

const ASYMMETRY_TOL_KHZ: f64 = 1e-9;

/// Parses a square coupling table in kHz.
///
/// The file must declare `# units: kHz` before the first data row; other `#`
/// lines and blank lines are ignored. Rows are comma separated.
pub fn parse_coupling_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut units_seen = false;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                if key.trim().eq_ignore_ascii_case("units") {
                    if value.trim() != "kHz" {
                        return Err(Error::CouplingParse { line: line_no, msg: format!("unsupported units `{}`", value.trim()) });
                    }
                    units_seen = true;
                }
            }
            continue;
        }
        if !units_seen {
            return Err(Error::CouplingParse { line: line_no, msg: "missing `# units: kHz` header".into() });
        }
        let row = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::CouplingParse { line: line_no, msg: format!("invalid number `{cell}`") })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line_no, row));
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::CouplingParse { line: text.lines().count(), msg: "no data rows".into() });
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, (line, row)) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::CouplingParse { line: *line, msg: format!("row has {} entries, expected {n}", row.len()) });
        }
        if row[i] != 0.0 {
            return Err(Error::CouplingParse { line: *line, msg: format!("nonzero diagonal entry {}", row[i]) });
        }
        for (j, &x) in row.iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    for (i, (line, _)) in rows.iter().enumerate() {
        for j in 0..i {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > ASYMMETRY_TOL_KHZ {
                return Err(Error::CouplingParse {
                    line: *line,
                    msg: format!("asymmetric entries ({}, {}) differ by {d:e} kHz", i + 1, j + 1),
                });
            }
        }
    }
    Ok(m)
}

/// Inverse of [`parse_coupling_csv`].
pub fn write_coupling_csv(khz: &DMatrix<f64>) -> String {
    let mut out = String::from("# units: kHz\n");
    for i in 0..khz.nrows() {
        let row: Vec<String> = (0..khz.ncols()).map(|j| format!("{}", khz[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Symmetric, zero-diagonal coupling matrix over a chain of qubits in units
/// of ω₀, with one row marked as the control qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix<T: Real> {
    chain: DMatrix<T>,
    control: usize,
}

impl<T: Real> CouplingMatrix<T> {
    pub fn new(chain: DMatrix<T>, control: usize) -> Result<Self> {
        let n = chain.nrows();
        if chain.ncols() != n || n < 2 {
            return Err(Error::Coupling(format!("coupling matrix must be square with size ≥ 2, got {}×{}", n, chain.ncols())));
        }
        if control >= n {
            return Err(Error::Coupling(format!("control index {control} outside matrix of size {n}")));
        }
        let scale = chain.iter().fold(T::zero(), |a, x| a.max(x.abs()));
        let tol = scale * T::lit(1e-12);
        for i in 0..n {
            if chain[(i, i)] != T::zero() {
                return Err(Error::Coupling(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if !chain[(i, j)].is_finite() || (chain[(i, j)] - chain[(j, i)]).abs() > tol {
                    return Err(Error::Coupling(format!("entries ({i}, {j}) and ({j}, {i}) are not symmetric")));
                }
            }
        }
        Ok(Self { chain, control })
    }

    /// Converts a kHz table with `J[ω₀] = J[kHz] / (ω₀/2π)[kHz]`.
    pub fn from_khz(khz: &DMatrix<f64>, control: usize, omega0_khz: f64) -> Result<Self> {
        if !(omega0_khz > 0.0) {
            return Err(Error::InvalidParameter(format!("ω₀/2π must be positive, got {omega0_khz} kHz")));
        }
        Self::new(khz.map(|x| T::lit(x / omega0_khz)), control)
    }

    pub fn size(&self) -> usize {
        self.chain.nrows()
    }

    pub fn control(&self) -> usize {
        self.control
    }

    /// Matrix in chain order.
    pub fn chain(&self) -> &DMatrix<T> {
        &self.chain
    }

    /// Chain indices of the targets, in chain order.
    pub fn target_indices(&self) -> Vec<usize> {
        (0..self.size()).filter(|&i| i != self.control).collect()
    }

    /// Control-to-target couplings in target order.
    pub fn control_row(&self) -> Vec<T> {
        self.target_indices().into_iter().map(|j| self.chain[(self.control, j)]).collect()
    }

    /// Reordered so that the control comes first, then targets in chain order.
    pub fn space_ordered(&self) -> DMatrix<T> {
        let order: Vec<usize> = std::iter::once(self.control).chain(self.target_indices()).collect();
        let n = order.len();
        DMatrix::from_fn(n, n, |i, j| self.chain[(order[i], order[j])])
    }
}

/// Mølmer–Sørensen drive: per-ion Rabi strengths `Ω_i`, Lamb–Dicke matrix
/// `η_im` (ion × mode), mode frequencies `ω_m`, beat-note detuning `μ`, and
/// spin / motional phases. Frequencies share one angular unit.
#[derive(Clone, Debug, PartialEq)]
pub struct MsDriveSpec<T: Real> {
    pub omega: Vec<T>,
    pub eta: DMatrix<T>,
    pub mode_freqs: Vec<T>,
    pub mu: T,
    pub phi: Vec<T>,
    pub psi: Vec<T>,
}

impl<T: Real> MsDriveSpec<T> {
    /// `min_m |μ − ω_m| > 10·max_{i,m} |η_im Ω_i|`
    pub fn is_dispersive(&self) -> bool {
        let gap = self.mode_freqs.iter().fold(T::max_value().unwrap(), |a, &w| a.min((self.mu - w).abs()));
        let mut strongest = T::zero();
        for (i, &om) in self.omega.iter().enumerate() {
            for m in 0..self.eta.ncols() {
                strongest = strongest.max((self.eta[(i, m)] * om).abs());
            }
        }
        gap > T::lit(10.0) * strongest
    }
}

/// `J_ij = Ω_iΩ_j Σ_m η_im η_jm ω_m / (μ² − ω_m²)`, zero diagonal.
pub fn ms_coupling_matrix<T: Real>(spec: &MsDriveSpec<T>) -> Result<DMatrix<T>> {
    let n = spec.omega.len();
    if spec.eta.nrows() != n || spec.eta.ncols() != spec.mode_freqs.len() {
        return Err(Error::Coupling(format!(
            "η is {}×{} but there are {n} ions and {} modes",
            spec.eta.nrows(),
            spec.eta.ncols(),
            spec.mode_freqs.len()
        )));
    }
    let mut weights = Vec::with_capacity(spec.mode_freqs.len());
    for (m, &w) in spec.mode_freqs.iter().enumerate() {
        let den = spec.mu * spec.mu - w * w;
        if den == T::zero() {
            return Err(Error::DetuningPole { mode: m });
        }
        weights.push(w / den);
    }
    if !spec.is_dispersive() {
        log::warn!("MS drive is not in the dispersive regime; phonon excitation is not negligible");
    }
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in (a + 1)..n {
            let mut s = T::zero();
            for (m, &wt) in weights.iter().enumerate() {
                s += spec.eta[(a, m)] * spec.eta[(b, m)] * wt;
            }
            let v = spec.omega[a] * spec.omega[b] * s;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    Ok(j)
}

/// Combined hopping matrix from two MS drives and its quality figures.
#[derive(Clone, Debug, PartialEq)]
pub struct HoppingReport<T: Real> {
    pub matrix: DMatrix<T>,
    /// `max_{i,j≠control} |J_ij|`
    pub residual: T,
    /// Spread of the control row, `max − min`.
    pub imbalance: T,
}

/// `J_ij cos(ψ_i−ψ_j) + J′_ij cos(ψ′_i−ψ′_j)`.
///
/// The second drive must be absent on the control ion, so `jb` needs a zero
/// row and column at `control`.
pub fn selective_hopping<T: Real>(
    ja: &DMatrix<T>,
    psi_a: &[T],
    jb: &DMatrix<T>,
    psi_b: &[T],
    control: usize,
) -> Result<HoppingReport<T>> {
    let n = ja.nrows();
    if ja.ncols() != n || jb.shape() != (n, n) || psi_a.len() != n || psi_b.len() != n {
        return Err(Error::Coupling("selective hopping inputs have mismatched shapes".into()));
    }
    if control >= n {
        return Err(Error::Coupling(format!("control index {control} outside matrix of size {n}")));
    }
    if (0..n).any(|k| jb[(control, k)] != T::zero() || jb[(k, control)] != T::zero()) {
        return Err(Error::Coupling("second drive must not address the control ion".into()));
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            T::zero()
        } else {
            ja[(i, j)] * (psi_a[i] - psi_a[j]).cos() + jb[(i, j)] * (psi_b[i] - psi_b[j]).cos()
        }
    });
    let mut residual = T::zero();
    let mut lo = T::max_value().unwrap();
    let mut hi = T::min_value().unwrap();
    for i in 0..n {
        if i == control {
            continue;
        }
        lo = lo.min(matrix[(control, i)]);
        hi = hi.max(matrix[(control, i)]);
        for j in 0..n {
            if j != control {
                residual = residual.max(matrix[(i, j)].abs());
            }
        }
    }
    Ok(HoppingReport { matrix, residual, imbalance: hi - lo })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measured_table_diagnostics() {
        let khz = parse_coupling_csv(SEVEN_ION_COUPLINGS_KHZ).unwrap();
        assert_eq!(khz.shape(), (5, 5));
        let zeros = vec![0.0; 5];
        let r = selective_hopping(&khz, &zeros, &DMatrix::zeros(5, 5), &zeros, SEVEN_ION_CONTROL).unwrap();
        assert!((r.imbalance - 0.004).abs() < 1e-12);
        assert!((r.residual - 2.25e-4).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let khz = parse_coupling_csv(SEVEN_ION_COUPLINGS_KHZ).unwrap();
        assert_eq!(parse_coupling_csv(&write_coupling_csv(&khz)).unwrap(), khz);
    }

    #[test]
    fn csv_rejects_bad_input() {
        let no_header = "0,1\n1,0\n";
        assert!(matches!(parse_coupling_csv(no_header), Err(Error::CouplingParse { line: 1, .. })));
        let asym = "# units: kHz\n0,1\n1.00000001,0\n";
        assert!(matches!(parse_coupling_csv(asym), Err(Error::CouplingParse { line: 3, .. })));
        let tiny = "# units: kHz\n0,1\n1.0000000001,0\n";
        assert!(parse_coupling_csv(tiny).is_ok());
        assert!(parse_coupling_csv("# units: kHz\n1,1\n1,0\n").is_err());
        assert!(parse_coupling_csv("# units: kHz\n0,1,2\n1,0,3\n").is_err());
        assert!(parse_coupling_csv("# units: MHz\n0,1\n1,0\n").is_err());
        assert!(parse_coupling_csv("# units: kHz\n0,x\n1,0\n").is_err());
    }

    #[test]
    fn khz_conversion_and_ordering() {
        let khz = parse_coupling_csv(SEVEN_ION_COUPLINGS_KHZ).unwrap();
        let m = CouplingMatrix::<f64>::from_khz(&khz, SEVEN_ION_CONTROL, 10.0).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        let row = m.control_row();
        assert!(row.iter().zip([0.0398, 0.0402, 0.0402, 0.0398]).all(|(&a, b)| close(a, b)));
        let s = m.space_ordered();
        assert!(close(s[(0, 1)], 0.0398));
        assert!(close(s[(1, 2)], 2.25e-5));
        assert!(close(s[(3, 4)], 2.25e-5));
    }

    fn drive(mu: f64) -> MsDriveSpec<f64> {
        MsDriveSpec {
            omega: vec![1.0, 1.3, 0.8],
            eta: DMatrix::from_row_slice(3, 2, &[0.1, 0.05, 0.08, -0.02, 0.06, 0.07]),
            mode_freqs: vec![10.0, 12.0],
            mu,
            phi: vec![0.0; 3],
            psi: vec![0.0; 3],
        }
    }

    #[test]
    fn ms_single_mode_and_poles() {
        let spec = MsDriveSpec {
            omega: vec![0.5, 0.5],
            eta: DMatrix::from_element(2, 1, 0.1),
            mode_freqs: vec![5.0],
            mu: 6.0,
            phi: vec![0.0; 2],
            psi: vec![0.0; 2],
        };
        let j = ms_coupling_matrix(&spec).unwrap();
        let expected: f64 = 0.25 * 0.01 * 5.0 / 11.0;
        assert!((j[(0, 1)] - expected).abs() < 1e-15);
        assert!(spec.is_dispersive());
        assert!(matches!(ms_coupling_matrix(&drive(12.0)), Err(Error::DetuningPole { mode: 1 })));
        let above = ms_coupling_matrix(&MsDriveSpec { mu: 5.5, ..spec.clone() }).unwrap();
        let below = ms_coupling_matrix(&MsDriveSpec { mu: 4.5, ..spec }).unwrap();
        assert!(above[(0, 1)] > 0.0 && below[(0, 1)] < 0.0);
    }

    #[test]
    fn ms_symmetric_and_scaling() {
        let spec = drive(11.0);
        let j = ms_coupling_matrix(&spec).unwrap();
        assert_eq!(j, j.transpose());
        let scaled = MsDriveSpec { omega: spec.omega.iter().map(|x| 2.0 * x).collect(), ..spec.clone() };
        let j2 = ms_coupling_matrix(&scaled).unwrap();
        assert!((j2 - j * 4.0).abs().max() < 1e-15);
    }

    #[test]
    fn designed_cancellation() {
        let ja = ms_coupling_matrix(&drive(11.0)).unwrap();
        let mut jb = -ja.clone();
        for k in 0..3 {
            jb[(0, k)] = 0.0;
            jb[(k, 0)] = 0.0;
        }
        let psi = [0.0, std::f64::consts::TAU, 2.0 * std::f64::consts::TAU];
        let r = selective_hopping(&ja, &psi, &jb, &[0.0; 3], 0).unwrap();
        assert!(r.residual < 1e-15);
        assert!((r.matrix[(0, 1)] - ja[(0, 1)]).abs() < 1e-15 && (r.matrix[(0, 2)] - ja[(0, 2)]).abs() < 1e-15);
        assert!(selective_hopping(&ja, &[0.0; 3], &ja, &[0.0; 3], 0).is_err());
        assert!(selective_hopping(&ja, &[0.0; 2], &jb, &[0.0; 3], 0).is_err());
    }
}
