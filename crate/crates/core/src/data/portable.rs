//! Plain-text dataset format.
//!
//! ```text
//! tsmtl-portable 1
//! features <p>
//! tasks <T>
//! seed <u64 | ->
//! counts <n_1> ... <n_T>
//! task 0
//! <x_1> ... <x_p> <y>        (n_1 lines)
//! task 1
//! ...
//! ```
//!
//! Numbers are written with 17 significant digits so a round trip is
//! lossless. Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{ProblemData, Task};
use crate::scalar::Scalar;

const MAGIC: &str = "tsmtl-portable 1";

#[derive(Debug, Clone, PartialEq)]
pub struct PortableDataset<T: Scalar> {
    pub data: ProblemData<T>,
    pub seed: Option<u64>,
}

pub fn write_portable<T: Scalar>(
    data: &ProblemData<T>,
    seed: Option<u64>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    out.write_all(to_portable_string(data, seed).as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn to_portable_string<T: Scalar>(data: &ProblemData<T>, seed: Option<u64>) -> String {
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    s.push_str(&format!("features {}\n", data.num_features()));
    s.push_str(&format!("tasks {}\n", data.num_tasks()));
    match seed {
        Some(seed) => s.push_str(&format!("seed {seed}\n")),
        None => s.push_str("seed -\n"),
    }
    let counts: Vec<String> = data.tasks().iter().map(|t| t.rows().to_string()).collect();
    s.push_str(&format!("counts {}\n", counts.join(" ")));
    for (t, task) in data.tasks().iter().enumerate() {
        s.push_str(&format!("task {t}\n"));
        for i in 0..task.rows() {
            let mut fields: Vec<String> = task
                .x
                .row(i)
                .iter()
                .map(|v| format!("{:.16e}", v.as_f64()))
                .collect();
            fields.push(format!("{:.16e}", task.y[i].as_f64()));
            s.push_str(&fields.join(" "));
            s.push('\n');
        }
    }
    s
}

pub fn read_portable<T: Scalar>(path: impl AsRef<Path>) -> Result<PortableDataset<T>> {
    parse_portable(&fs::read_to_string(path)?)
}

pub fn parse_portable<T: Scalar>(text: &str) -> Result<PortableDataset<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Schema(format!("portable file ends before {what}")))
    };

    let (_, magic) = next("header")?;
    if magic != MAGIC {
        return Err(Error::Schema(format!(
            "expected `{MAGIC}`, found `{magic}`"
        )));
    }
    let features: usize = keyed(next("features")?, "features")?;
    let tasks: usize = keyed(next("tasks")?, "tasks")?;
    let (line, seed_line) = next("seed")?;
    let seed = match seed_line.strip_prefix("seed") {
        Some(v) if v.trim() == "-" => None,
        Some(v) => Some(parse_num::<u64>(v.trim(), line, "seed")?),
        None => return Err(Error::Schema(format!("line {line}: expected `seed`"))),
    };
    let (line, counts_line) = next("counts")?;
    let counts = counts_line
        .strip_prefix("counts")
        .ok_or_else(|| Error::Schema(format!("line {line}: expected `counts`")))?
        .split_whitespace()
        .map(|v| parse_num::<usize>(v, line, "counts"))
        .collect::<Result<Vec<_>>>()?;
    if counts.len() != tasks {
        return Err(Error::Schema(format!(
            "line {line}: {} counts for {tasks} tasks",
            counts.len()
        )));
    }

    let mut out = Vec::with_capacity(tasks);
    for (t, &n) in counts.iter().enumerate() {
        let index: usize = keyed(next("task block")?, "task")?;
        if index != t {
            return Err(Error::Schema(format!(
                "expected task {t}, found task {index}"
            )));
        }
        let mut x = DMatrix::<T>::zeros(n, features);
        let mut y = DVector::<T>::zeros(n);
        for i in 0..n {
            let (line, row) = next("task rows")?;
            let values = row
                .split_whitespace()
                .map(|v| parse_num::<f64>(v, line, "value"))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != features + 1 {
                return Err(Error::Schema(format!(
                    "line {line}: expected {} values, found {}",
                    features + 1,
                    values.len()
                )));
            }
            for j in 0..features {
                x[(i, j)] = T::lit(values[j]);
            }
            y[i] = T::lit(values[features]);
        }
        out.push(Task::new(x, y)?);
    }
    if let Ok((line, extra)) = next("end") {
        return Err(Error::Schema(format!(
            "line {line}: unexpected trailing content `{extra}`"
        )));
    }
    Ok(PortableDataset {
        data: ProblemData::new(out)?,
        seed,
    })
}

fn keyed<V: std::str::FromStr>((line, text): (usize, &str), key: &str) -> Result<V> {
    let value = text
        .strip_prefix(key)
        .ok_or_else(|| Error::Schema(format!("line {line}: expected `{key}`")))?;
    parse_num(value.trim(), line, key)
}

fn parse_num<V: std::str::FromStr>(v: &str, line: usize, column: &str) -> Result<V> {
    v.parse().map_err(|_| Error::Parse {
        row: line,
        column: column.to_string(),
        value: v.to_string(),
    })
}
