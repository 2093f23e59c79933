//! The static master model (node capacity, flow conservation, terminals)
//! over arc variables `x_a^k`, optional cut rows, and fixed-format MPS export.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::cuts::{dist_cut, Cut};
use super::Problem;
use crate::error::Result;
use crate::graph::ArcId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

/// Binary variable `x_a^k`; `service` is a scenario index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Column {
    pub service: usize,
    pub arc: ArcId,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub sense: Sense,
    pub rhs: f64,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct MasterModel {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// Rows of the static master; cut rows follow.
    pub static_rows: usize,
    index: HashMap<(usize, ArcId), usize>,
}

impl MasterModel {
    /// Builds one column per admissible `(service, arc)` pair and the
    /// node-capacity, conservation, source and sink rows.
    pub fn build(problem: &Problem) -> Self {
        let g = problem.graph;
        let mut columns = Vec::new();
        let mut index = HashMap::new();
        for (i, &k) in problem.services.iter().enumerate() {
            for a in problem.allowed[i].ones() {
                index.insert((k, a), columns.len());
                columns.push(Column {
                    service: k,
                    arc: a,
                    cost: problem.costs.arc_cost(k, a),
                });
            }
        }
        let col = |k: usize, a: ArcId| index.get(&(k, a)).copied();
        let mut rows = Vec::new();
        for v in 0..g.num_nodes() {
            let terms = problem
                .services
                .iter()
                .flat_map(|&k| g.out_arcs(v).iter().filter_map(move |&a| col(k, a as usize)))
                .map(|c| (c, 1.0))
                .collect();
            rows.push(Row {
                sense: Sense::Le,
                rhs: 1.0,
                terms,
            });
        }
        for &k in &problem.services {
            let view = &g.services[k];
            for v in 0..g.num_nodes() {
                if v == view.source || v == view.target {
                    continue;
                }
                let mut terms: Vec<(usize, f64)> = g
                    .out_arcs(v)
                    .iter()
                    .filter_map(|&a| col(k, a as usize))
                    .map(|c| (c, 1.0))
                    .collect();
                terms.extend(g.in_arcs(v).filter_map(|a| col(k, a)).map(|c| (c, -1.0)));
                rows.push(Row {
                    sense: Sense::Eq,
                    rhs: 0.0,
                    terms,
                });
            }
        }
        for &k in &problem.services {
            let view = &g.services[k];
            let out = g
                .out_arcs(view.source)
                .iter()
                .filter_map(|&a| col(k, a as usize))
                .map(|c| (c, 1.0))
                .collect();
            rows.push(Row {
                sense: Sense::Eq,
                rhs: 1.0,
                terms: out,
            });
            let inc = g.in_arcs(view.target).filter_map(|a| col(k, a)).map(|c| (c, 1.0)).collect();
            rows.push(Row {
                sense: Sense::Eq,
                rhs: 1.0,
                terms: inc,
            });
        }
        let static_rows = rows.len();
        MasterModel {
            columns,
            rows,
            static_rows,
            index,
        }
    }

    pub fn num_variables(&self) -> usize {
        self.columns.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, service: usize, arc: ArcId) -> Option<usize> {
        self.index.get(&(service, arc)).copied()
    }

    /// Appends a cut row; terms without a column are dropped.
    pub fn add_cut(&mut self, cut: &Cut) {
        let terms = cut
            .terms
            .iter()
            .filter_map(|t| self.column(t.service, t.arc).map(|c| (c, t.coef)))
            .collect();
        self.rows.push(Row {
            sense: Sense::Le,
            rhs: cut.rhs,
            terms,
        });
    }

    /// Appends every clearance row and every elbow row of the problem.
    pub fn add_all_cuts(&mut self, problem: &Problem) {
        let g = problem.graph;
        let allowed = |k: usize, a: ArcId| {
            problem
                .services
                .iter()
                .position(|&s| s == k)
                .is_some_and(|i| problem.allowed[i].contains(a))
        };
        if problem.services.len() > 1 {
            for (i, &k) in problem.services.iter().enumerate() {
                for a in problem.allowed[i].ones() {
                    if g.is_virtual_arc(a) {
                        continue;
                    }
                    let cut = dist_cut(g, problem.scenario, &problem.services, a, k, allowed);
                    self.add_cut(&cut);
                }
            }
        }
        for (i, &k) in problem.services.iter().enumerate() {
            let dmin = problem.scenario.services[k].elbow_min;
            let mut pairs = BTreeSet::new();
            for p in 0..g.num_physical_nodes() {
                let at = g.physical.nodes[p];
                let near = g.physical_nodes_in_box(&crate::geometry::Cuboid::centered(at, dmin));
                for q in near {
                    if q > p && at.distance(&g.physical.nodes[q]) <= dmin {
                        pairs.insert((p, q));
                    }
                }
            }
            let arcs_at = |p: usize| -> Vec<ArcId> {
                g.elbow_edges(p)
                    .into_iter()
                    .flat_map(|e| [2 * e, 2 * e + 1])
                    .filter(|&a| problem.allowed[i].contains(a))
                    .collect()
            };
            for p in 0..g.num_physical_nodes() {
                let arcs = arcs_at(p);
                for x in 0..arcs.len() {
                    for y in x + 1..arcs.len() {
                        self.push_elbow_row(k, &[arcs[x], arcs[y]]);
                    }
                }
            }
            for (p, q) in pairs {
                let mut arcs = arcs_at(p);
                arcs.extend(arcs_at(q));
                self.push_elbow_row(k, &arcs);
            }
        }
    }

    fn push_elbow_row(&mut self, k: usize, arcs: &[ArcId]) {
        let terms = arcs
            .iter()
            .filter_map(|&a| self.column(k, a))
            .map(|c| (c, 1.0))
            .collect();
        self.rows.push(Row {
            sense: Sense::Le,
            rhs: 1.0,
            terms,
        });
    }

    /// Writes the model in fixed-format MPS with all columns binary.
    pub fn write_mps(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.columns.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, coef) in &row.terms {
                by_col[c].push((r, coef));
            }
        }
        writeln!(w, "NAME          PIPEROUTE")?;
        writeln!(w, "ROWS")?;
        writeln!(w, " N  COST")?;
        for (r, row) in self.rows.iter().enumerate() {
            let s = match row.sense {
                Sense::Le => "L",
                Sense::Eq => "E",
            };
            writeln!(w, " {:<2} {}", s, row_name(r))?;
        }
        writeln!(w, "COLUMNS")?;
        writeln!(w, "    {:<8}  {:<8}                 'INTORG'", "MARKER", "'MARKER'")?;
        for (c, col) in self.columns.iter().enumerate() {
            let name = col_name(c);
            let mut entries: Vec<(String, f64)> = Vec::with_capacity(by_col[c].len() + 1);
            if col.cost != 0.0 {
                entries.push(("COST".to_string(), col.cost));
            }
            entries.extend(by_col[c].iter().map(|&(r, v)| (row_name(r), v)));
            for pair in entries.chunks(2) {
                match pair {
                    [(r1, v1), (r2, v2)] => writeln!(
                        w,
                        "    {:<8}  {:<8}  {:>12}   {:<8}  {:>12}",
                        name,
                        r1,
                        number(*v1),
                        r2,
                        number(*v2)
                    )?,
                    [(r1, v1)] => writeln!(w, "    {:<8}  {:<8}  {:>12}", name, r1, number(*v1))?,
                    _ => unreachable!(),
                }
            }
        }
        writeln!(w, "    {:<8}  {:<8}                 'INTEND'", "MARKER", "'MARKER'")?;
        writeln!(w, "RHS")?;
        for (r, row) in self.rows.iter().enumerate() {
            if row.rhs != 0.0 {
                writeln!(w, "    {:<8}  {:<8}  {:>12}", "RHS", row_name(r), number(row.rhs))?;
            }
        }
        writeln!(w, "BOUNDS")?;
        for c in 0..self.columns.len() {
            writeln!(w, " UP {:<8}  {:<8}  {:>12}", "BND", col_name(c), "1")?;
        }
        writeln!(w, "ENDATA")?;
        Ok(())
    }
}

fn base36(mut n: usize) -> String {
    const DIGITS: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    let mut s = Vec::new();
    loop {
        s.push(DIGITS[n % 36]);
        n /= 36;
        if n == 0 {
            break;
        }
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

pub fn row_name(r: usize) -> String {
    format!("R{}", base36(r))
}

pub fn col_name(c: usize) -> String {
    format!("C{}", base36(c))
}

/// A value rendered in at most 12 characters.
fn number(v: f64) -> String {
    let s = format!("{v}");
    if s.len() <= 12 {
        return s;
    }
    for prec in (0..=8).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}

/// Builds the master model of `problem` and writes it as MPS to `path`.
pub fn export_model(problem: &Problem, include_all_cuts: bool, path: &Path) -> Result<MasterModel> {
    let mut model = MasterModel::build(problem);
    if include_all_cuts {
        model.add_all_cuts(problem);
    }
    let mut w = BufWriter::new(File::create(path)?);
    model.write_mps(&mut w)?;
    w.flush()?;
    Ok(model)
}
