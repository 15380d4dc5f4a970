//! Rasterization of event catalogs onto the space-time mesh.
//!
//! Events are binned into square spatial cells of edge `dx` and daily slices
//! of width `dt`; the stored quantity is a density in events/(km²·day), so
//! the integral of a field over all cells and days equals the in-grid event
//! count exactly.

use serde::{Deserialize, Serialize};

use crate::ingest::EventCatalog;

/// Geometry of the space-time mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cell edge, km.
    pub dx: f64,
    /// Time step, days.
    pub dt: f64,
    /// Cells along x.
    pub nx: usize,
    /// Cells along y.
    pub ny: usize,
    /// Time slices.
    pub nt: usize,
    /// Planar coordinates of the corner of cell (0, 0), km.
    pub origin: (f64, f64),
}

impl GridSpec {
    /// Square grid covering a disc of `radius_km` centered at the planar
    /// origin: `nx = ny = ceil(2 * radius / dx)`.
    pub fn for_disc(radius_km: f64, dx: f64, dt: f64, nt: usize) -> GridSpec {
        let n = (2.0 * radius_km / dx).ceil() as usize;
        let half = n as f64 * dx / 2.0;
        GridSpec {
            dx,
            dt,
            nx: n,
            ny: n,
            nt,
            origin: (-half, -half),
        }
    }

    /// Cell area, km². Exactly `dx * dx`.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Floor-based cell lookup; points exactly on an upper cell edge belong
    /// to the higher-index cell. `None` when outside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.origin.0) / self.dx;
        let fy = (y - self.origin.1) / self.dx;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        if i < self.nx && j < self.ny {
            Some((i, j))
        } else {
            None
        }
    }

    /// Center coordinates of cell (i, j), km.
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + (i as f64 + 0.5) * self.dx,
            self.origin.1 + (j as f64 + 0.5) * self.dx,
        )
    }

    /// Day slice containing time `t`; `None` outside `[0, nt * dt)`.
    pub fn day_of(&self, t: f64) -> Option<usize> {
        if t < 0.0 {
            return None;
        }
        let n = (t / self.dt).floor() as usize;
        if n < self.nt {
            Some(n)
        } else {
            None
        }
    }

    /// Flat row-major index of cell (i, j).
    pub fn flat(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Mask of cells whose center lies within `radius_km` of the planar
    /// origin. `None` radius marks every cell eligible.
    pub fn disc_mask(&self, radius_km: Option<f64>) -> Vec<bool> {
        match radius_km {
            None => vec![true; self.n_cells()],
            Some(r) => {
                let mut mask = vec![false; self.n_cells()];
                for j in 0..self.ny {
                    for i in 0..self.nx {
                        let (cx, cy) = self.cell_center(i, j);
                        mask[self.flat(i, j)] = cx.hypot(cy) <= r;
                    }
                }
                mask
            }
        }
    }
}

/// The discretized event density on a [`GridSpec`], events/(km²·day).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    /// `nt * ny * nx` values, slice-major then row-major.
    pub values: Vec<f64>,
    pub spec: GridSpec,
}

impl DensityField {
    /// One spatial slice (day `n`) as a flat `ny * nx` view.
    pub fn slice(&self, n: usize) -> &[f64] {
        let len = self.spec.n_cells();
        &self.values[n * len..(n + 1) * len]
    }

    /// Total events represented by the field: `sum * cell_area * dt`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_area() * self.spec.dt
    }

    /// Writes non-zero cells as `(n, j, i, value)` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "n,j,i,value")?;
        for n in 0..self.spec.nt {
            let slice = self.slice(n);
            for j in 0..self.spec.ny {
                for i in 0..self.spec.nx {
                    let v = slice[self.spec.flat(i, j)];
                    if v != 0.0 {
                        writeln!(writer, "{n},{j},{i},{v}")?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Binary fixture dump: `nt, ny, nx` as little-endian u64, then the
    /// row-major values as little-endian f64.
    pub fn write_binary<W: std::io::Write>(&self, mut writer: W) -> std::io::Result<()> {
        for dim in [self.spec.nt, self.spec.ny, self.spec.nx] {
            writer.write_all(&(dim as u64).to_le_bytes())?;
        }
        for v in &self.values {
            writer.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a [`write_binary`](Self::write_binary) dump back onto `spec`
    /// (which must carry the matching dimensions).
    pub fn read_binary<R: std::io::Read>(mut reader: R, spec: &GridSpec) -> std::io::Result<DensityField> {
        let mut word = [0u8; 8];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            reader.read_exact(&mut word)?;
            *d = u64::from_le_bytes(word) as usize;
        }
        if dims != [spec.nt, spec.ny, spec.nx] {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!(
                    "dump dimensions {dims:?} do not match the grid ({}, {}, {})",
                    spec.nt, spec.ny, spec.nx
                ),
            ));
        }
        let mut values = vec![0.0f64; dims.iter().product()];
        for v in &mut values {
            reader.read_exact(&mut word)?;
            *v = f64::from_le_bytes(word);
        }
        Ok(DensityField {
            values,
            spec: *spec,
        })
    }
}

/// Bins a catalog onto the mesh. Events outside the grid (in space or time)
/// are counted and reported, not fatal.
pub fn rasterize(catalog: &EventCatalog, spec: &GridSpec) -> (DensityField, usize) {
    let mut values = vec![0.0; spec.nt * spec.n_cells()];
    let weight = 1.0 / (spec.cell_area() * spec.dt);
    let mut out_of_grid = 0usize;
    for e in &catalog.events {
        match (spec.day_of(e.time), spec.cell_of(e.x, e.y)) {
            (Some(n), Some((i, j))) => {
                values[n * spec.n_cells() + spec.flat(i, j)] += weight;
            }
            _ => out_of_grid += 1,
        }
    }
    (
        DensityField {
            values,
            spec: *spec,
        },
        out_of_grid,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Event, EventCatalog};
    use chrono::NaiveDate;

    fn catalog_at(points: &[(f64, f64, f64)]) -> EventCatalog {
        let mut events: Vec<Event> = points
            .iter()
            .map(|&(t, x, y)| Event {
                time: t,
                lat: 0.0,
                lon: 0.0,
                x,
                y,
                kind: "test".into(),
            })
            .collect();
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        EventCatalog {
            events,
            epoch: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            center: (41.765, -87.665),
            radius_km: Some(5.0),
        }
    }

    fn spec() -> GridSpec {
        GridSpec::for_disc(5.0, 0.25, 1.0, 8)
    }

    #[test]
    fn disc_grid_dimensions() {
        let s = spec();
        assert_eq!(s.nx, 40);
        assert_eq!(s.ny, 40);
        assert_eq!(s.origin, (-5.0, -5.0));
        assert_eq!(s.cell_area(), 0.0625);
    }

    #[test]
    fn single_event_density() {
        let c = catalog_at(&[(0.5, 0.1, 0.1)]);
        let (field, lost) = rasterize(&c, &spec());
        assert_eq!(lost, 0);
        let nonzero: Vec<f64> = field.values.iter().copied().filter(|&v| v != 0.0).collect();
        assert_eq!(nonzero, vec![16.0]);
    }

    #[test]
    fn two_events_same_cell_same_day() {
        let c = catalog_at(&[(0.25, 0.1, 0.1), (0.75, 0.2, 0.2)]);
        let (field, _) = rasterize(&c, &spec());
        let max = field.values.iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 32.0);
    }

    #[test]
    fn empty_catalog_gives_zero_field() {
        let c = catalog_at(&[]);
        let (field, lost) = rasterize(&c, &spec());
        assert_eq!(lost, 0);
        assert!(field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_grid_events_reported() {
        let c = catalog_at(&[(0.5, 0.1, 0.1), (9.0, 0.1, 0.1), (0.5, 6.0, 0.0)]);
        let (field, lost) = rasterize(&c, &spec());
        assert_eq!(lost, 2);
        assert_eq!(field.total_mass(), 1.0);
    }

    #[test]
    fn cell_of_edge_conventions() {
        let s = spec();
        assert_eq!(s.cell_of(-5.0, -5.0), Some((0, 0)));
        // A point exactly on an upper cell edge belongs to the higher cell.
        assert_eq!(s.cell_of(-5.0 + 0.25, -5.0), Some((1, 0)));
        assert_eq!(s.cell_of(-5.1, 0.0), None);
        assert_eq!(s.cell_of(5.0, 0.0), None);
    }

    #[test]
    fn mass_conservation_exact() {
        let pts: Vec<(f64, f64, f64)> = (0..57)
            .map(|i| {
                let t = (i % 8) as f64 + 0.3;
                let x = -4.9 + 0.17 * i as f64 % 9.8;
                let y = -4.9 + 0.23 * i as f64 % 9.8;
                (t, x, y)
            })
            .collect();
        let c = catalog_at(&pts);
        let (field, lost) = rasterize(&c, &spec());
        assert_eq!(lost, 0);
        assert!((field.total_mass() - 57.0).abs() < 1e-9);
    }

    #[test]
    fn translation_by_dx_shifts_field_one_cell() {
        let pts = [(0.5, 0.3, -1.2), (1.5, -2.1, 0.7), (2.5, 1.05, 1.05)];
        let shifted: Vec<(f64, f64, f64)> = pts.iter().map(|&(t, x, y)| (t, x + 0.25, y)).collect();
        let s = spec();
        let (a, _) = rasterize(&catalog_at(&pts), &s);
        let (b, _) = rasterize(&catalog_at(&shifted), &s);
        for n in 0..s.nt {
            for j in 0..s.ny {
                for i in 0..s.nx - 1 {
                    let idx_a = n * s.n_cells() + s.flat(i, j);
                    let idx_b = n * s.n_cells() + s.flat(i + 1, j);
                    assert_eq!(a.values[idx_a], b.values[idx_b]);
                }
            }
        }
    }

    #[test]
    fn binary_dump_roundtrips_exactly() {
        let pts = [(0.5, 0.3, -1.2), (1.5, -2.1, 0.7), (1.7, -2.1, 0.7)];
        let s = spec();
        let (field, _) = rasterize(&catalog_at(&pts), &s);
        let mut buf = Vec::new();
        field.write_binary(&mut buf).unwrap();
        let back = DensityField::read_binary(buf.as_slice(), &s).unwrap();
        assert_eq!(field, back);

        let wrong = GridSpec { nt: 3, ..s };
        assert!(DensityField::read_binary(buf.as_slice(), &wrong).is_err());
    }

    #[test]
    fn csv_export_lists_occupied_cells() {
        let s = spec();
        let (field, _) = rasterize(&catalog_at(&[(0.5, 0.1, 0.1)]), &s);
        let mut buf = Vec::new();
        field.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,j,i,value");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].ends_with(",16"));
    }

    #[test]
    fn disc_mask_counts_interior_cells() {
        let s = spec();
        let mask = s.disc_mask(Some(5.0));
        let count = mask.iter().filter(|&&m| m).count();
        // Cell centers within 5 km of the origin: close to pi * r^2 / dx^2.
        let expected = std::f64::consts::PI * 25.0 / 0.0625;
        assert!((count as f64 - expected).abs() / expected < 0.02);
        // Corner cells are outside the disc.
        assert!(!mask[s.flat(0, 0)]);
        assert!(mask[s.flat(20, 20)]);
    }
}
