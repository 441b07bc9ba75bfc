//! CSV tables with exact headers and shortest round-trip float formatting.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::cosmo::{theta_mode_at, PhiEquation};
use crate::error::{Result, VacuaError};
use crate::fermion::FermionEquation;
use crate::mode::{ModeEquation, ModeTrajectory};
use crate::sigma::SigmaTrajectory;

pub const MODE_HEADER: [&str; 8] = [
    "t",
    "re_u",
    "im_u",
    "re_du",
    "im_du",
    "sigma",
    "dsigma",
    "wronskian_defect",
];
pub const SIGMA_HEADER: [&str; 5] = ["t", "sigma", "dsigma", "d2sigma", "constraint_residual"];
pub const FERMION_HEADER: [&str; 8] = [
    "tau",
    "re_chi",
    "im_chi",
    "re_dchi",
    "im_dchi",
    "sigma",
    "dsigma",
    "normalization_residual",
];
pub const PHI_HEADER: [&str; 10] = [
    "t",
    "re_u",
    "im_u",
    "re_du",
    "im_du",
    "sigma1",
    "re_U",
    "im_U",
    "sigma2",
    "wronskian_over_X",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated text, LF line endings, one header line. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:?}");
            }
            out.push('\n');
        }
        out
    }

    /// Writes the table and returns the SHA-256 of the bytes written.
    pub fn write(&self, path: &Path) -> Result<String> {
        let text = self.to_csv();
        std::fs::write(path, text.as_bytes())?;
        Ok(super::sha256_hex(text.as_bytes()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| VacuaError::Config("empty CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| VacuaError::Config(format!("CSV line {}: {e}", n + 2)))?;
            if row.len() != header.len() {
                return Err(VacuaError::Config(format!(
                    "CSV line {} has {} fields, expected {}",
                    n + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VacuaError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name).ok_or_else(|| {
            VacuaError::Config(format!(
                "column '{name}' not found in [{}]",
                self.header.join(", ")
            ))
        })?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn mode_table(traj: &ModeTrajectory) -> Table {
    let mut t = Table::new(&MODE_HEADER);
    for s in &traj.samples {
        let st = s.state;
        t.push(vec![
            st.t, st.u.re, st.u.im, st.du.re, st.du.im, s.sigma, s.dsigma, s.defect,
        ]);
    }
    t
}

pub fn sigma_table(traj: &SigmaTrajectory) -> Table {
    let mut t = Table::new(&SIGMA_HEADER);
    for s in &traj.samples {
        let st = s.state;
        t.push(vec![st.t, st.sigma, st.dsigma, st.d2sigma, s.residual]);
    }
    t
}

pub fn fermion_table(eq: &FermionEquation, traj: &ModeTrajectory) -> Result<Table> {
    let mut t = Table::new(&FERMION_HEADER);
    for s in &traj.samples {
        let st = s.state;
        let sig = eq.sigma_state(&st)?;
        let residual = eq.normalization_residual(&st)?;
        t.push(vec![
            st.t, st.u.re, st.u.im, st.du.re, st.du.im, sig.sigma, sig.dsigma, residual,
        ]);
    }
    Ok(t)
}

pub fn phi_table(eq: &PhiEquation, traj: &ModeTrajectory) -> Result<Table> {
    let mut t = Table::new(&PHI_HEADER);
    for s in &traj.samples {
        let st = s.state;
        let theta = theta_mode_at(eq, &st)?;
        let w = st.wronskian() / (Complex64::i() * eq.normalization(st.t)?);
        t.push(vec![
            st.t,
            st.u.re,
            st.u.im,
            st.du.re,
            st.du.im,
            s.sigma,
            theta.u.re,
            theta.u.im,
            theta.sigma,
            w.re,
        ]);
    }
    Ok(t)
}
