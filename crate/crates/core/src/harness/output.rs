use std::fs;
use std::path::Path;

use crate::confidence::Fold;
use crate::error::{Error, Result};
use crate::moments::sigma_standard_error;

use super::stats::{histogram, NormalMixture};
use super::ScenarioResult;

/// Writes every artifact of `result` into `dir`, creating it if needed.
/// Contents depend only on the result, so equal seeds give equal files.
pub fn write_outputs(result: &ScenarioResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(result))?;
    fs::write(dir.join("prune_events.csv"), events_csv(result)?)?;
    write_histograms(result, dir)?;
    if let Some(first) = result.realizations.first() {
        for g in &first.graphs {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["a", "b", "weight"])?;
            for &(a, b, weight) in &g.edges {
                w.write_record([a.to_string(), b.to_string(), weight.to_string()])?;
            }
            fs::write(dir.join(format!("graph_{}.csv", g.t)), into_bytes(w)?)?;
        }
    }
    let summary = serde_json::to_string_pretty(&result.summary()).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("summary.json"), summary + "\n")?;
    Ok(())
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn metrics_csv(result: &ScenarioResult) -> String {
    let s = &result.series;
    let mut out = String::from(
        "t,mse_local,mse_collab,mse_oracle,wrong_link_fraction,collab_lo,collab_hi,oracle_lo,oracle_hi,local_lo,local_hi\n",
    );
    let band = |b: &Option<(Vec<f64>, Vec<f64>)>, i: usize| match b {
        Some((lo, hi)) => format!("{},{}", lo[i], hi[i]),
        None => ",".to_string(),
    };
    for i in 0..s.t.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.t[i],
            s.mse_local[i],
            s.mse_collab[i],
            s.mse_oracle[i],
            s.wrong_link_fraction[i],
            band(&s.band_collab, i),
            band(&s.band_oracle, i),
            band(&s.band_local, i)
        ));
    }
    out
}

fn events_csv(result: &ScenarioResult) -> Result<Vec<u8>> {
    let labels: Vec<&str> = result.config.classes.iter().map(|c| c.label.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["realization", "t", "a", "b", "class_a", "class_b", "fold"])?;
    for e in result.events() {
        w.write_record([
            e.realization.to_string(),
            e.t.to_string(),
            e.a.to_string(),
            e.b.to_string(),
            labels[e.class_a].to_string(),
            labels[e.class_b].to_string(),
            e.fold.to_string(),
        ])?;
    }
    into_bytes(w)
}

fn write_histograms(result: &ScenarioResult, dir: &Path) -> Result<()> {
    let cfg = &result.config;
    let class_of = cfg.class_assignment();
    let n = class_of.len() as f64;
    let share: Vec<f64> =
        (0..cfg.classes.len()).map(|c| class_of.iter().filter(|&&k| k == c).count() as f64 / n).collect();
    for &t in &cfg.checkpoints {
        let mut sigma = Vec::new();
        let mut kappa = Vec::new();
        for snap in result.realizations.iter().flat_map(|r| r.snapshots.iter()).filter(|s| s.t == t) {
            sigma.extend_from_slice(&snap.sigma);
            kappa.extend_from_slice(&snap.kappa);
        }
        if sigma.is_empty() {
            continue;
        }
        let tf = t as f64;
        let sigma_overlay = NormalMixture {
            components: cfg
                .classes
                .iter()
                .zip(&share)
                .map(|(c, &w)| {
                    let se = sigma_standard_error(c.sigma, c.family.difference_kurtosis(), tf).unwrap_or(0.0);
                    (w, c.sigma, se)
                })
                .collect(),
        };
        let kappa_overlay = NormalMixture {
            components: cfg
                .classes
                .iter()
                .zip(&share)
                .map(|(c, &w)| (w, c.family.kurtosis(), (24.0 / tf).sqrt()))
                .collect(),
        };
        if let Ok(h) = histogram(&sigma, cfg.histogram_bins, Some(&sigma_overlay)) {
            fs::write(dir.join(format!("histogram_sigma_{t}.csv")), h.to_csv())?;
        }
        if let Ok(h) = histogram(&kappa, cfg.histogram_bins, Some(&kappa_overlay)) {
            fs::write(dir.join(format!("histogram_kappa_{t}.csv")), h.to_csv())?;
        }
    }
    for fold in Fold::ALL {
        let times: Vec<f64> =
            result.events().filter(|e| e.fold == fold && e.cross_class()).map(|e| e.t as f64).collect();
        if let Ok(h) = histogram(&times, cfg.histogram_bins, None) {
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            let mut text = h.to_csv();
            text.push_str(&format!("# mean,{mean}\n"));
            fs::write(dir.join(format!("histogram_tsep_{fold}.csv")), text)?;
        }
    }
    Ok(())
}
