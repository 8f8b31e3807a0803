//! CSV output. Reals are written with 17 significant digits so that values
//! round-trip exactly; the format is byte-stable for a fixed seed.

use std::io::Write;

use crate::aggregate::ResultTable;
use crate::runner::RunRecord;

/// `{:.16e}`: one digit before the point plus sixteen after.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn records_header(dim: usize) -> String {
    let mut cols = vec!["acquisition".to_string(), "repetition".into(), "iteration".into()];
    cols.extend((1..=dim).map(|i| format!("x_{i}")));
    cols.extend(
        ["y", "simple_regret", "inference_regret", "distance_to_maximizer", "wall_time_ms"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols.join(",")
}

pub fn write_records<W: Write>(out: &mut W, dim: usize, records: &[RunRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", records_header(dim))?;
    for r in records {
        let mut fields = vec![r.acquisition.name().to_string(), r.repetition.to_string(), r.iteration.to_string()];
        fields.extend(r.x.iter().map(|v| fmt_real(*v)));
        fields.extend(
            [r.y, r.simple_regret, r.inference_regret, r.distance_to_maximizer, r.wall_time_ms]
                .iter()
                .map(|v| fmt_real(*v)),
        );
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_summary<W: Write>(out: &mut W, table: &ResultTable) -> std::io::Result<()> {
    writeln!(
        out,
        "acquisition,iteration,count,mean_simple_regret,mean_inference_regret,log10_mean_simple_regret,\
         log10_mean_inference_regret,median_simple_regret,median_inference_regret"
    )?;
    for r in &table.rows {
        let reals = [
            r.mean_simple_regret,
            r.mean_inference_regret,
            r.log10_mean_simple_regret,
            r.log10_mean_inference_regret,
            r.median_simple_regret,
            r.median_inference_regret,
        ];
        let reals: Vec<String> = reals.iter().map(|v| fmt_real(*v)).collect();
        writeln!(out, "{},{},{},{}", r.acquisition, r.iteration, r.count, reals.join(","))?;
    }
    Ok(())
}

pub fn write_histograms<W: Write>(out: &mut W, table: &ResultTable) -> std::io::Result<()> {
    writeln!(out, "acquisition,bin_lower,bin_upper,count")?;
    for h in &table.histograms {
        for (i, c) in h.counts.iter().enumerate() {
            writeln!(out, "{},{},{},{c}", h.acquisition, fmt_real(h.edges[i]), fmt_real(h.edges[i + 1]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rmes_core::AcquisitionKind;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, 0.0] {
            let s = fmt_real(v);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn column_order() {
        assert_eq!(
            records_header(2),
            "acquisition,repetition,iteration,x_1,x_2,y,simple_regret,inference_regret,distance_to_maximizer,wall_time_ms"
        );
        let rec = RunRecord {
            acquisition: AcquisitionKind::Rmes,
            repetition: 3,
            iteration: 7,
            x: vec![0.5],
            y: -1.0,
            simple_regret: 0.25,
            inference_regret: 0.5,
            distance_to_maximizer: 2.0,
            wall_time_ms: 0.0,
            failure: None,
        };
        let mut buf = Vec::new();
        write_records(&mut buf, 1, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(
            line,
            "rmes,3,7,5.0000000000000000e-1,-1.0000000000000000e0,2.5000000000000000e-1,5.0000000000000000e-1,\
             2.0000000000000000e0,0.0000000000000000e0"
        );
    }
}
