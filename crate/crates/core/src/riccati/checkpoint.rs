//! Binary trajectory checkpoints. Header: level (`u64`, 0 without a grid),
//! `dt`, `T` (`f64`), node count (`u64`), problem size (`u64`). Each node:
//! step and rank (`u64`), `L` column-major, `D` column-major, all
//! little-endian `f64`.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::{gains, DreProblem, RiccatiNode, RiccatiTrajectory};
use crate::error::{Error, Result};
use crate::linalg::LowRankSymmetric;

fn put_u64(out: &mut impl Write, v: u64) -> Result<()> {
    Ok(out.write_all(&v.to_le_bytes())?)
}

fn put_f64s<'a>(out: &mut impl Write, vs: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    for v in vs {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn get_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(input: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(get_u64(input)?))
}

pub fn write_checkpoint(traj: &RiccatiTrajectory, out: &mut impl Write) -> Result<()> {
    let n = traj.nodes.first().map_or(0, |node| node.solution.dim());
    put_u64(out, traj.grid.map_or(0, |g| u64::from(g.level())))?;
    put_f64s(out, &[traj.dt, traj.final_time])?;
    put_u64(out, traj.nodes.len() as u64)?;
    put_u64(out, n as u64)?;
    for node in &traj.nodes {
        put_u64(out, node.step as u64)?;
        put_u64(out, node.solution.rank() as u64)?;
        put_f64s(out, node.solution.factor().iter())?;
        put_f64s(out, node.solution.core().iter())?;
    }
    Ok(())
}

/// Reads a checkpoint and recomputes the gains from `problem`, which must
/// match the header.
pub fn read_checkpoint(input: &mut impl Read, problem: &DreProblem) -> Result<RiccatiTrajectory> {
    let level = get_u64(input)?;
    let dt = get_f64(input)?;
    let final_time = get_f64(input)?;
    let count = get_u64(input)? as usize;
    let n = get_u64(input)? as usize;
    let expected_level = problem.grid.map_or(0, |g| u64::from(g.level()));
    if level != expected_level || n != problem.n() || dt != problem.dt || final_time != problem.final_time {
        return Err(Error::Config(format!(
            "checkpoint header (level {level}, dt {dt}, T {final_time}, n {n}) does not match the problem"
        )));
    }
    let mut nodes = Vec::with_capacity(count);
    let mut max_rank = 0;
    for _ in 0..count {
        let step = get_u64(input)? as usize;
        let rank = get_u64(input)? as usize;
        if rank > n {
            return Err(Error::Config(format!("checkpoint rank {rank} exceeds size {n}")));
        }
        let factor = DMatrix::from_iterator(n, rank, (0..n * rank).map(|_| get_f64(input)).collect::<Result<Vec<_>>>()?);
        let core = DMatrix::from_iterator(rank, rank, (0..rank * rank).map(|_| get_f64(input)).collect::<Result<Vec<_>>>()?);
        let solution = LowRankSymmetric::new(factor, core)?;
        let (gain, boundary_gain) = gains(problem, &solution)?;
        max_rank = max_rank.max(rank);
        nodes.push(RiccatiNode { step, solution, gain, boundary_gain });
    }
    Ok(RiccatiTrajectory {
        grid: problem.grid,
        dt,
        final_time,
        boundary_input: problem.boundary_input.clone(),
        nodes,
        max_rank,
    })
}
