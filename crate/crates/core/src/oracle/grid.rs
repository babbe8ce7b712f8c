use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on node count accepted from parsed files.
pub const MAX_NODES: usize = 1 << 27;

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Nodal values on a uniform 2D or 3D lattice, with a mask of in-domain
/// nodes. Node `(i, j, k)` sits at `origin + h·(i, j, k)`; storage is
/// x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub origin: Vec<f64>,
    pub h: f64,
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl FieldGrid {
    /// A grid of zeros with every node masked in.
    pub fn new(origin: Vec<f64>, h: f64, dims: Vec<usize>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Format(format!("grid spacing must be positive, got {h}")));
        }
        if !(2..=3).contains(&dims.len()) || origin.len() != dims.len() {
            return Err(Error::Format(format!(
                "grid needs 2 or 3 axes with matching origin, got dims {dims:?} and origin {origin:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Format("grid origin must be finite".into()));
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| if d >= 2 { acc.checked_mul(d) } else { None })
            .filter(|&n| n <= MAX_NODES)
            .ok_or_else(|| Error::Format(format!("unsupported grid dimensions {dims:?}")))?;
        Ok(Self {
            origin,
            h,
            dims,
            values: vec![0.0; n],
            mask: vec![true; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index(&self, ijk: &[usize]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim()).rev() {
            idx = idx * self.dims[a] + ijk[a];
        }
        idx
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in 0..self.dim() {
            out[a] = idx % self.dims[a];
            idx /= self.dims[a];
        }
        out
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let m = self.multi_index(idx);
        (0..self.dim()).map(|a| self.origin[a] + self.h * m[a] as f64).collect()
    }

    /// Cell lookup: lower-corner multi-index and fractional offsets.
    fn locate(&self, x: &[f64]) -> Result<([usize; 3], [f64; 3])> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut lo = [0; 3];
        let mut frac = [0.0; 3];
        for a in 0..self.dim() {
            let t = (x[a] - self.origin[a]) / self.h;
            let top = (self.dims[a] - 1) as f64;
            if !(t >= -1e-9 && t <= top + 1e-9) {
                return Err(Error::OutsideDomain(x.to_vec()));
            }
            let t = t.clamp(0.0, top);
            let i = (t.floor() as usize).min(self.dims[a] - 2);
            lo[a] = i;
            frac[a] = t - i as f64;
        }
        Ok((lo, frac))
    }

    /// Corner nodes of the cell holding `x` with their multilinear weights,
    /// skipping zero-weight corners.
    fn stencil(&self, x: &[f64]) -> Result<(Vec<(usize, f64)>, [usize; 3], [f64; 3])> {
        let (lo, frac) = self.locate(x)?;
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut ijk = [0; 3];
            for a in 0..d {
                let up = (corner >> a) & 1 == 1;
                ijk[a] = lo[a] + up as usize;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let idx = self.index(&ijk[..d]);
            if !self.mask[idx] {
                return Err(Error::OutsideDomain(x.to_vec()));
            }
            out.push((idx, w));
        }
        Ok((out, lo, frac))
    }

    /// Bilinear (2D) or trilinear (3D) interpolation; errors if the query
    /// touches a masked-out node.
    pub fn sample(&self, x: &[f64]) -> Result<f64> {
        let (st, _, _) = self.stencil(x)?;
        Ok(st.iter().map(|&(i, w)| w * self.values[i]).sum())
    }

    /// Gradient of the multilinear interpolant at `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, lo, frac) = self.stencil(x)?;
        let d = self.dim();
        let mut g = vec![0.0; d];
        for corner in 0..(1usize << d) {
            let mut ijk = [0; 3];
            for a in 0..d {
                ijk[a] = lo[a] + ((corner >> a) & 1);
            }
            let idx = self.index(&ijk[..d]);
            if !self.mask[idx] {
                continue;
            }
            for (a, ga) in g.iter_mut().enumerate() {
                let mut w = 1.0 / self.h;
                for b in 0..d {
                    let up = (corner >> b) & 1 == 1;
                    w *= match (b == a, up) {
                        (true, true) => 1.0,
                        (true, false) => -1.0,
                        (false, true) => frac[b],
                        (false, false) => 1.0 - frac[b],
                    };
                }
                *ga += w * self.values[idx];
            }
        }
        Ok(g)
    }

    /// Whether [`FieldGrid::sample`] succeeds at `x`.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.stencil(x).is_ok()
    }

    /// CSV with header `x,y[,z],value`, one row per masked-in node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = ["x", "y", "z"][..self.dim()].to_vec();
        header.push("value");
        w.write_record(&header).map_err(csv_err)?;
        for idx in 0..self.len() {
            if !self.mask[idx] {
                continue;
            }
            let mut row: Vec<String> = self.node(idx).into_iter().map(fmt17).collect();
            row.push(fmt17(self.values[idx]));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Rebuilds a grid from [`FieldGrid::write_csv`] output. The lattice is
    /// inferred from the coordinates; nodes absent from the file are masked.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        let names: Vec<&str> = header.iter().map(str::trim).collect();
        let d = match names.as_slice() {
            ["x", "y", "value"] => 2,
            ["x", "y", "z", "value"] => 3,
            _ => return Err(Error::Format(format!("unexpected CSV header {names:?}"))),
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != d + 1 {
                return Err(Error::Format(format!(
                    "row has {} fields, expected {}",
                    rec.len(),
                    d + 1
                )));
            }
            let row = rec
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad number {f:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row[..d].iter().any(|c| !c.is_finite()) {
                return Err(Error::Format("non-finite coordinate".into()));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format("CSV holds no nodes".into()));
        }
        let mut origin = vec![f64::INFINITY; d];
        let mut top = vec![f64::NEG_INFINITY; d];
        let mut h = f64::INFINITY;
        for a in 0..d {
            let mut c: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            origin[a] = c[0];
            top[a] = c[c.len() - 1];
            for w in c.windows(2) {
                h = h.min(w[1] - w[0]);
            }
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Format("cannot infer grid spacing".into()));
        }
        let dims = (0..d)
            .map(|a| {
                let n = ((top[a] - origin[a]) / h).round() + 1.0;
                if n.is_finite() && n <= MAX_NODES as f64 {
                    Ok((n as usize).max(2))
                } else {
                    Err(Error::Format("grid too large".into()))
                }
            })
            .collect::<Result<Vec<usize>>>()?;
        let mut grid = FieldGrid::new(origin, h, dims)?;
        grid.mask.fill(false);
        grid.values.fill(f64::NAN);
        for row in &rows {
            let mut ijk = [0; 3];
            for a in 0..d {
                let t = (row[a] - grid.origin[a]) / h;
                let i = t.round();
                if (t - i).abs() > 1e-6 {
                    return Err(Error::Format(format!("point {:?} is off the lattice", &row[..d])));
                }
                ijk[a] = i as usize;
            }
            let idx = grid.index(&ijk[..d]);
            grid.values[idx] = row[d];
            grid.mask[idx] = !row[d].is_nan();
        }
        Ok(grid)
    }

    /// Plain-text grid: a header line `nx ny h x0 y0` (3D: `nx ny nz h x0 y0
    /// z0`) followed by one line of `nx` values per row, y-major; masked-out
    /// nodes are written as `nan`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        let origin: Vec<String> = self.origin.iter().map(|o| fmt17(*o)).collect();
        s.push_str(&format!("{} {} {}\n", dims.join(" "), fmt17(self.h), origin.join(" ")));
        for row in self.values.chunks(self.dims[0]).zip(self.mask.chunks(self.dims[0])) {
            let line: Vec<String> = row
                .0
                .iter()
                .zip(row.1)
                .map(|(v, &m)| if m { fmt17(*v) } else { "nan".into() })
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Format("empty grid file".into()))?
            .split_whitespace()
            .collect();
        let d = match header.len() {
            5 => 2,
            7 => 3,
            n => return Err(Error::Format(format!("grid header has {n} fields, expected 5 or 7"))),
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
        };
        let dims = header[..d]
            .iter()
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|e| Error::Format(format!("bad size {s:?}: {e}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let h = num(header[d])?;
        let origin = header[d + 1..].iter().map(|s| num(s)).collect::<Result<Vec<f64>>>()?;
        let mut grid = FieldGrid::new(origin, h, dims)?;
        let mut idx = 0;
        for line in lines {
            for tok in line.split_whitespace() {
                if idx >= grid.len() {
                    return Err(Error::Format("more values than the header declares".into()));
                }
                let v = num(tok)?;
                grid.values[idx] = v;
                grid.mask[idx] = !v.is_nan();
                idx += 1;
            }
        }
        if idx != grid.len() {
            return Err(Error::Format(format!(
                "grid declares {} values, found {idx}",
                grid.len()
            )));
        }
        Ok(grid)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("CSV: {e}"))
}

/// Convenience for [`FieldGrid::sample`].
pub fn grid_sample(grid: &FieldGrid, x: &[f64]) -> Result<f64> {
    grid.sample(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> FieldGrid {
        let mut g = FieldGrid::new(vec![0.0, 0.0], 0.5, vec![3, 3]).unwrap();
        for i in 0..g.len() {
            let x = g.node(i);
            g.values[i] = x[0] + 2.0 * x[1];
        }
        g
    }

    #[test]
    fn nodes_and_midpoints() {
        let g = ramp();
        assert_eq!(g.sample(&[0.5, 1.0]).unwrap(), 2.5);
        let mut two = FieldGrid::new(vec![0.0, 0.0], 1.0, vec![2, 2]).unwrap();
        two.values = vec![0.0, 1.0, 0.0, 1.0];
        assert_eq!(two.sample(&[0.5, 0.3]).unwrap(), 0.5);
        let g3 = FieldGrid {
            values: vec![2.5; 8],
            ..FieldGrid::new(vec![0.0; 3], 1.0, vec![2, 2, 2]).unwrap()
        };
        assert_eq!(g3.sample(&[0.2, 0.7, 0.9]).unwrap(), 2.5);
        assert!(g.sample(&[1.2, 0.0]).is_err());
    }

    #[test]
    fn masked_nodes_are_never_read() {
        let mut g = ramp();
        g.mask[4] = false;
        g.values[4] = f64::NAN;
        assert!(g.sample(&[0.6, 0.6]).is_err());
        assert_eq!(g.sample(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(g.sample(&[1.0, 0.25]).unwrap(), 1.5);
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = ramp();
        let d = g.gradient(&[0.3, 0.8]).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14 && (d[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn text_and_csv_round_trip() {
        let mut g = ramp();
        g.mask[2] = false;
        g.values[2] = f64::NAN;
        let t = FieldGrid::from_text(&g.to_text()).unwrap();
        assert_eq!(t.dims, g.dims);
        assert_eq!(t.mask, g.mask);
        let c = FieldGrid::from_csv(&g.to_csv()).unwrap();
        assert_eq!(c.mask, g.mask);
        for i in (0..g.len()).filter(|&i| g.mask[i]) {
            assert_eq!(t.values[i], g.values[i]);
            assert_eq!(c.values[i], g.values[i]);
        }
        assert!(g.to_csv().starts_with("x,y,value\n"));
        assert!(g.to_text().starts_with("3 3 5.0000000000000000e-1 "));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(FieldGrid::from_text("").is_err());
        assert!(FieldGrid::from_text("2 2 1 0 0\n1 2 3\n").is_err());
        assert!(FieldGrid::from_text("2 2 -1 0 0\n1 2\n3 4\n").is_err());
        assert!(FieldGrid::from_text("99999999 99999999 1 0 0\n").is_err());
        assert!(FieldGrid::from_csv("x,y,value\n").is_err());
        assert!(FieldGrid::from_csv("x,y,value\n0,0,1\n").is_err());
        assert!(FieldGrid::from_csv("a,b\n0,0\n").is_err());
        assert!(FieldGrid::from_csv("x,y,value\n0,0,1\n1,0,1\n0.5,0.25,1\n1e300,0,1\n").is_err());
    }

    proptest! {
        #[test]
        fn constant_grid_samples_constant(c in -10.0f64..10.0, x in 0.0f64..2.0, y in 0.0f64..2.0) {
            let g = FieldGrid { values: vec![c; 25], ..FieldGrid::new(vec![0.0, 0.0], 0.5, vec![5, 5]).unwrap() };
            prop_assert!((g.sample(&[x, y]).unwrap() - c).abs() <= 1e-14 * c.abs().max(1.0));
        }

        #[test]
        fn text_parser_never_panics(s in "\\PC{0,200}") {
            let _ = FieldGrid::from_text(&s);
            let _ = FieldGrid::from_csv(&s);
        }
    }
}
