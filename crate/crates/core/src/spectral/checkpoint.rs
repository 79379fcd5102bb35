//! Field checkpoints: one JSON header line, then raw little-endian `f64`
//! samples in row-major order, vector components stored one after another.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Field, Grid, VectorField};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    pub layout: String,
    pub scalar: String,
    pub kind: String,
    pub components: usize,
}

impl CheckpointHeader {
    fn for_grid(grid: &Grid, components: usize) -> Self {
        Self {
            dim: grid.dim(),
            n: grid.n(),
            box_length: grid.box_length(),
            layout: "row-major".into(),
            scalar: "float64-little-endian".into(),
            kind: "physical".into(),
            components,
        }
    }
}

fn write_block<W: Write>(w: &mut W, grid: &Grid, fields: &[&Field]) -> Result<()> {
    let header = serde_json::to_string(&CheckpointHeader::for_grid(grid, fields.len()))
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    for f in fields {
        let mut bytes = Vec::with_capacity(8 * grid.num_points());
        for v in f.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    Ok(())
}

fn read_block<R: BufRead>(r: &mut R) -> Result<(Grid, Vec<Field>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: CheckpointHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    if header.layout != "row-major" || header.scalar != "float64-little-endian" || header.kind != "physical" {
        return Err(Error::Checkpoint(format!("unsupported encoding {header:?}")));
    }
    let grid = Grid::new(header.dim, header.n, header.box_length)?;
    let mut fields = Vec::with_capacity(header.components);
    let mut bytes = vec![0u8; 8 * grid.num_points()];
    for _ in 0..header.components {
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        fields.push(Field::from_values(&grid, values)?);
    }
    Ok((grid, fields))
}

pub fn write_field<W: Write>(w: &mut W, field: &Field) -> Result<()> {
    write_block(w, field.grid(), &[field])
}

pub fn write_vector_field<W: Write>(w: &mut W, v: &VectorField) -> Result<()> {
    let comps: Vec<&Field> = v.components().iter().collect();
    write_block(w, v.grid(), &comps)
}

pub fn read_field<R: BufRead>(r: &mut R) -> Result<Field> {
    let (_, mut fields) = read_block(r)?;
    if fields.len() != 1 {
        return Err(Error::Checkpoint(format!("expected 1 component, found {}", fields.len())));
    }
    Ok(fields.pop().expect("one field"))
}

pub fn read_vector_field<R: BufRead>(r: &mut R) -> Result<VectorField> {
    let (_, fields) = read_block(r)?;
    VectorField::new(fields)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_round_trip_is_bitwise() {
        let grid = Grid::new(2, 8, 3.0).unwrap();
        let a = Field::from_fn(&grid, |x| x[0].sin() * x[1]);
        let b = Field::from_fn(&grid, |x| (x[1] * 0.3).exp());
        let v = VectorField::new(vec![a, b]).unwrap();
        let mut buf = Vec::new();
        write_vector_field(&mut buf, &v).unwrap();
        let first_line = buf.split(|&c| c == b'\n').next().unwrap();
        let header: serde_json::Value = serde_json::from_slice(first_line).unwrap();
        assert_eq!(header["layout"], "row-major");
        assert_eq!(header["scalar"], "float64-little-endian");
        assert_eq!(header["components"], 2);
        assert_eq!(buf.len(), first_line.len() + 1 + 2 * 64 * 8);

        let back = read_vector_field(&mut buf.as_slice()).unwrap();
        assert_eq!(back.grid(), v.grid());
        for (x, y) in back.components().iter().zip(v.components()) {
            assert_eq!(x.values(), y.values());
        }
    }

    #[test]
    fn component_count_mismatch_is_rejected() {
        let grid = Grid::new(2, 8, 1.0).unwrap();
        let v = VectorField::zeros(&grid);
        let mut buf = Vec::new();
        write_vector_field(&mut buf, &v).unwrap();
        assert!(matches!(read_field(&mut buf.as_slice()), Err(Error::Checkpoint(_))));
    }
}
