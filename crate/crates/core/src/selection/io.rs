//! CSV files for weights, masks and relevance. Weight and mask files have one
//! row per step: `step_index,t_start,<reaction labels...>`.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::mechanism::Mechanism;

use super::{SelectionError, SelectionMask, WeightMatrix};

fn header(mechanism: &Mechanism) -> Vec<&str> {
    let mut h = vec!["step_index", "t_start"];
    h.extend(mechanism.labels());
    h
}

fn check_width(mechanism: &Mechanism, n: usize) -> Result<(), SelectionError> {
    if mechanism.n_reactions() != n {
        return Err(SelectionError::ShapeMismatch(format!(
            "{n} weight rows for a mechanism with {} reactions",
            mechanism.n_reactions()
        )));
    }
    Ok(())
}

pub fn write_weights_csv(
    weights: &WeightMatrix,
    mechanism: &Mechanism,
    writer: impl Write,
) -> Result<(), SelectionError> {
    check_width(mechanism, weights.n_reactions())?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(mechanism))?;
    for k in 0..weights.n_steps() {
        let mut rec = vec![k.to_string(), weights.step_starts[k].to_string()];
        rec.extend(weights.values.column(k).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mask_csv(
    mask: &SelectionMask,
    mechanism: &Mechanism,
    writer: impl Write,
) -> Result<(), SelectionError> {
    check_width(mechanism, mask.n_reactions())?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(mechanism))?;
    for k in 0..mask.n_steps() {
        let mut rec = vec![k.to_string(), mask.step_starts[k].to_string()];
        rec.extend(
            mask.selected
                .column(k)
                .iter()
                .map(|&b| if b { "1" } else { "0" }.to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `reaction_index,label,relevance`, with 1-based reaction numbers.
pub fn write_relevance_csv(
    relevance: &[f64],
    mechanism: &Mechanism,
    writer: impl Write,
) -> Result<(), SelectionError> {
    check_width(mechanism, relevance.len())?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["reaction_index", "label", "relevance"])?;
    for (i, (label, r)) in mechanism.labels().into_iter().zip(relevance).enumerate() {
        w.write_record([(i + 1).to_string(), label.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a mask file, returning the reaction labels from its header.
pub fn read_mask_csv(reader: impl Read) -> Result<(Vec<String>, SelectionMask), SelectionError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if head.len() < 3 || head[0] != "step_index" || head[1] != "t_start" {
        return Err(SelectionError::MaskFormat(format!(
            "expected header step_index,t_start,<labels>, found {head:?}"
        )));
    }
    let labels = head[2..].to_vec();
    let nr = labels.len();
    let mut starts = Vec::new();
    let mut cells = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let step: usize = rec[0].parse().map_err(|_| {
            SelectionError::MaskFormat(format!("row {row}: bad step index {:?}", &rec[0]))
        })?;
        if step != row {
            return Err(SelectionError::MaskFormat(format!(
                "row {row}: step index {step} out of sequence"
            )));
        }
        starts.push(
            rec[1]
                .parse::<f64>()
                .map_err(|_| SelectionError::MaskFormat(format!("row {row}: bad t_start")))?,
        );
        for (col, field) in rec.iter().skip(2).enumerate() {
            cells.push(match field {
                "0" => false,
                "1" => true,
                other => {
                    return Err(SelectionError::MaskFormat(format!(
                        "row {row}, column {:?}: expected 0 or 1, got {other:?}",
                        labels[col]
                    )))
                }
            });
        }
    }
    let steps = starts.len();
    // cells are step-major; the mask is reaction-major
    let by_step = Array2::from_shape_vec((steps, nr), cells)
        .map_err(|e| SelectionError::MaskFormat(e.to_string()))?;
    Ok((
        labels,
        SelectionMask {
            selected: by_step.t().to_owned(),
            step_starts: starts,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Condition;
    use crate::mechanism::parse_mechanism;
    use crate::selection::{threshold, SelectionConfig};
    use ndarray::array;

    #[test]
    fn mask_round_trip() {
        let m = parse_mechanism(
            r#"{"species": ["A","B"], "reactions": [
            {"reactants": {"A": 1}, "products": {"B": 1}, "rate": {"k": 1}},
            {"reactants": {"B": 1}, "products": {"A": 1}, "rate": {"k": 1}, "label": "back, slow"}]}"#,
        )
        .unwrap();
        let w = WeightMatrix {
            values: array![[0.0, 0.25, 1.0], [1.0, 0.0, 0.0]],
            step_starts: vec![0.0, 0.5, 1.0],
            condition: Condition::default(),
            config: SelectionConfig::default(),
        };
        let mask = threshold(&w, 0.0);
        let mut buf = Vec::new();
        write_mask_csv(&mask, &m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with("step_index,t_start,A -> B,\"back, slow\"\n0,0,0,1\n"),
            "{text}"
        );
        let (labels, back) = read_mask_csv(&buf[..]).unwrap();
        assert_eq!(labels, ["A -> B", "back, slow"]);
        assert_eq!(back, mask);

        let mut buf = Vec::new();
        write_weights_csv(&w, &m, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("\n1,0.5,0.25,0\n"));
    }

    #[test]
    fn bad_mask_cells() {
        let text = "step_index,t_start,r1\n0,0,0.5\n";
        assert!(matches!(
            read_mask_csv(text.as_bytes()),
            Err(SelectionError::MaskFormat(_))
        ));
        let text = "step,t_start,r1\n0,0,1\n";
        assert!(read_mask_csv(text.as_bytes()).is_err());
    }
}
