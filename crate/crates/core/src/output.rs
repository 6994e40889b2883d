//! VTK and CSV writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::approx::StepRecord;
use crate::error::Result;
use crate::limit::{CurveField, LimitRecord, XiPair};
use crate::mesh::{BulkField, Grid1D, Grid3D};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Legacy VTK structured points with one cell-data scalar.
pub fn write_vtk(path: &Path, grid: &Grid3D, field: &BulkField, name: &str) -> Result<()> {
    let mut w = create(path)?;
    let h = grid.spacing();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{name} at t = {}", field.t)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", grid.n[0] + 1, grid.n[1] + 1, grid.n[2] + 1)?;
    writeln!(w, "ORIGIN {} {} {}", grid.lo[0], grid.lo[1], grid.lo[2])?;
    writeln!(w, "SPACING {} {} {}", h[0], h[1], h[2])?;
    writeln!(w, "CELL_DATA {}", grid.cell_count())?;
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &field.values {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_step_records(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "step,t,mass,energy,gradient_energy,iterations,residual,min,max")?;
    for r in records {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e}",
            r.step, r.t, r.mass, r.energy, r.gradient_energy, r.iterations, r.residual, r.min, r.max
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_limit_records(path: &Path, records: &[LimitRecord]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "step,t,bulk_mass,line_mass,total_mass,iterations,residual")?;
    for r in records {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{},{:e}",
            r.step,
            r.t,
            r.bulk_mass,
            r.line_mass,
            r.total_mass(),
            r.iterations,
            r.residual
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Rows `t, s, u_C, xi_nu, xi_omega` for every time level and node.
pub fn write_curve_series(path: &Path, mesh: &Grid1D, series: &[(CurveField, XiPair)]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "t,s,uc,xi_nu,xi_omega")?;
    let nodes = mesh.nodes();
    for (uc, xi) in series {
        for (k, s) in nodes.iter().enumerate() {
            writeln!(w, "{:e},{:e},{:e},{:e},{:e}", uc.t, s, uc.values[k], xi.nu[k], xi.omega[k])?;
        }
    }
    w.flush()?;
    Ok(())
}
