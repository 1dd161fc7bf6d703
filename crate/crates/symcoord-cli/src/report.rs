//! CSV artifacts: per-node prescriptions, belief traces, reduction
//! tables, and the verification table. All rows come out of ordered
//! containers, so files are byte-identical across runs.

use std::io::Write;

use symcoord_core::analysis::ReductionReport;
use symcoord_core::belief::Belief;
use symcoord_core::model::InfoStructure;
use symcoord_core::scalar::Scalar;
use symcoord_core::solver::ReachableNode;
use symcoord_core::TeamModel;

use crate::format::common_labels;
use crate::scenario::VerifyRow;

pub fn scalar_cell<N: Scalar>(v: &N) -> String {
    if N::EXACT {
        format!("{v}")
    } else {
        format!("{}", v.to_f64())
    }
}

/// One row per (node, private realization): the prescription the
/// coordinator plays there, one column per action.
pub fn write_prescriptions_csv<N: Scalar, W: Write>(
    model: &TeamModel<N>,
    is: InfoStructure,
    tree: &[ReachableNode<N>],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "t".to_string(),
        "common".to_string(),
        "x0".to_string(),
        "private".to_string(),
    ];
    header.extend(
        model
            .action_space()
            .labels()
            .iter()
            .map(|l| format!("u={l}")),
    );
    w.write_record(&header)?;
    for node in tree {
        let common = common_labels(model, is, &node.common);
        let x0 = model.shared_space().label(node.node.belief.x0());
        for (i, p) in model.private_domain(is, node.t).iter().enumerate() {
            let mut record = vec![
                node.t.to_string(),
                common.clone(),
                x0.to_string(),
                private_label(model, p),
            ];
            record.extend(node.prescription.row(i).iter().map(scalar_cell));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn private_label<N: Scalar>(model: &TeamModel<N>, p: &[usize]) -> String {
    p.iter()
        .map(|&x| model.local_space().label(x).to_string())
        .collect::<Vec<_>>()
        .join("|")
}

/// Belief trace: `(common, t, x0, private label, pi1, pi2)` per factored
/// node, or `(common, t, x0, pair label, pi12)` for the joint structure.
pub fn write_belief_csv<N: Scalar, W: Write>(
    model: &TeamModel<N>,
    is: InfoStructure,
    tree: &[ReachableNode<N>],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if is.uses_joint_belief() {
        w.write_record(["common", "t", "x0", "pair", "pi12"])?;
    } else {
        w.write_record(["common", "t", "x0", "private", "pi1", "pi2"])?;
    }
    for node in tree {
        let common = common_labels(model, is, &node.common);
        let x0 = model.shared_space().label(node.node.belief.x0());
        match &node.node.belief {
            Belief::Factored(b) => {
                for (i, p) in model.private_domain(is, node.t).iter().enumerate() {
                    w.write_record([
                        common.clone(),
                        node.t.to_string(),
                        x0.to_string(),
                        private_label(model, p),
                        scalar_cell(b.pi1.get(i)),
                        scalar_cell(b.pi2.get(i)),
                    ])?;
                }
            }
            Belief::Joint(b) => {
                for p1 in 0..b.dim {
                    for p2 in 0..b.dim {
                        w.write_record([
                            common.clone(),
                            node.t.to_string(),
                            x0.to_string(),
                            format!(
                                "{}|{}",
                                model.local_space().label(p1),
                                model.local_space().label(p2)
                            ),
                            scalar_cell(b.joint(p1, p2)),
                        ])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reduction table: `(t, x, common, agent, action, probability)` rows for
/// both reduced strategies, then a summary row with the gap and witness.
pub fn write_reduction_csv<N: Scalar, W: Write>(
    model: &TeamModel<N>,
    report: &ReductionReport<N>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "common", "agent", "action", "probability"])?;
    for (agent, strategy) in [(1usize, &report.reduced.g1), (2, &report.reduced.g2)] {
        for t in 1..=model.horizon() {
            for ((p, c), dist) in strategy.table(t) {
                let common = common_labels(model, InfoStructure::P1c, c);
                for (u, weight) in dist.iter().enumerate() {
                    w.write_record([
                        t.to_string(),
                        private_label(model, p),
                        common.clone(),
                        agent.to_string(),
                        model.action_space().label(u).to_string(),
                        scalar_cell(weight),
                    ])?;
                }
            }
        }
    }
    let (witness_common, witness_private, witness_t) = match &report.witness {
        Some(wit) => (
            common_labels(model, InfoStructure::P1c, &wit.common),
            private_label(model, &wit.private),
            wit.t.to_string(),
        ),
        None => ("-".into(), "-".into(), "-".into()),
    };
    w.write_record([
        witness_t,
        witness_private,
        witness_common,
        "gap".to_string(),
        "-".to_string(),
        scalar_cell(&report.symmetry_gap),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_verify_csv<W: Write>(rows: &[VerifyRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "quantity", "expected", "computed", "pass"])?;
    for row in rows {
        w.write_record([
            row.scenario.clone(),
            row.quantity.clone(),
            row.expected.clone(),
            row.computed.clone(),
            row.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable verification table.
pub fn render_verify_table(rows: &[VerifyRow]) -> String {
    let mut widths = [8usize, 8, 8, 8];
    for row in rows {
        widths[0] = widths[0].max(row.scenario.len());
        widths[1] = widths[1].max(row.quantity.len());
        widths[2] = widths[2].max(row.expected.len());
        widths[3] = widths[3].max(row.computed.len());
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}  result\n",
        "scenario",
        "quantity",
        "expected",
        "computed",
        w0 = widths[0],
        w1 = widths[1],
        w2 = widths[2],
        w3 = widths[3],
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}  {}\n",
            row.scenario,
            row.quantity,
            row.expected,
            row.computed,
            if row.pass { "pass" } else { "FAIL" },
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3],
        ));
    }
    out
}
