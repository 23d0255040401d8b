//! CSV regression rows.
//!
//! Columns, in order: `family, params, N, lambda1, lambda_min, eta_num,
//! eta_den, lemma1_pass`, then `eq1_bound_eps<tag>, tau_exact_eps<tag>` for
//! each requested epsilon. The tag is the decimal digits after `0.`, so
//! 0.25 gives `eps25` and 0.01 gives `eps01`.

use std::path::Path;

use oddwalk::report::AnalysisReport;

pub fn eps_tag(eps: f64) -> String {
    let text = eps.to_string();
    match text.strip_prefix("0.") {
        Some(digits) => digits.to_string(),
        None => text.replace(['.', '-'], "_"),
    }
}

pub fn header(epsilons: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = ["family", "params", "N", "lambda1", "lambda_min", "eta_num", "eta_den", "lemma1_pass"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for &eps in epsilons {
        let tag = eps_tag(eps);
        cols.push(format!("eq1_bound_eps{tag}"));
        cols.push(format!("tau_exact_eps{tag}"));
    }
    cols
}

pub fn row(epsilons: &[f64], report: &AnalysisReport) -> Vec<String> {
    let (num, den) = report
        .walks
        .eta
        .split_once('/')
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .unwrap_or_else(|| (report.walks.eta.clone(), "1".to_string()));
    let bound_ok = report.checks.get("lemma1").is_some_and(|v| v.is_pass());
    let mut cells = vec![
        report.descriptor.family.name().to_string(),
        report.descriptor.params_string(),
        report.descriptor.states.to_string(),
        report.spectrum.lambda_1.to_string(),
        report.spectrum.lambda_min.to_string(),
        num,
        den,
        bound_ok.to_string(),
    ];
    for &eps in epsilons {
        let bound = report.bounds.mixing.iter().find(|b| b.epsilon == eps);
        let tau = report.oracle.exact_mixing.iter().find(|m| m.epsilon == eps);
        cells.push(bound.map(|b| b.bound.to_string()).unwrap_or_default());
        cells.push(tau.map(|t| t.steps.to_string()).unwrap_or_default());
    }
    cells
}

pub fn write_csv(path: &Path, epsilons: &[f64], reports: &[AnalysisReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(epsilons))?;
    for r in reports {
        w.write_record(row(epsilons, r))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags() {
        assert_eq!(eps_tag(0.25), "25");
        assert_eq!(eps_tag(0.01), "01");
        let h = header(&[0.25, 0.01]);
        assert_eq!(h[8], "eq1_bound_eps25");
        assert_eq!(h[11], "tau_exact_eps01");
    }
}
