use super::fit::SurvivalFit;

/// Display labels, in table order.
pub const TABLE_ROWS: [(&str, &str); 5] = [
    ("video_clicks_z", "Standardized Video Clicks"),
    ("malfunction", "Malfunction"),
    ("alone", "Alone"),
    ("pair", "Pair"),
    ("group", "Group"),
];

fn strip_leading_zero(s: String) -> String {
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

/// "p < .001" below 0.001, "n.s." above 0.10, otherwise two decimals
/// (three when two would round to zero).
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p < .001".to_owned()
    } else if p > 0.10 {
        "n.s.".to_owned()
    } else {
        let two = format!("{p:.2}");
        let s = if two == "0.00" { format!("{p:.3}") } else { two };
        format!("p = {}", strip_leading_zero(s))
    }
}

/// Two decimals without trailing zeros or a leading zero: .97, 1.7, .6
pub fn format_hr(hr: f64) -> String {
    let s = format!("{hr:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.').to_owned();
    strip_leading_zero(s)
}

/// Hazard-ratio table: known predictors in fixed order, then any other
/// non-intercept, non-week column in fit order.
pub fn report_table(fit: &SurvivalFit) -> String {
    let mut rows: Vec<(String, String, String)> = Vec::new();
    for (col, label) in TABLE_ROWS {
        if let Some(c) = fit.get(col) {
            rows.push((label.to_owned(), format_hr(c.hazard_ratio), format_p(c.p_value)));
        }
    }
    for c in &fit.coefficients {
        let known = TABLE_ROWS.iter().any(|(col, _)| *col == c.name);
        if !known && c.name != super::model::INTERCEPT && !c.name.starts_with("week_") {
            rows.push((c.name.clone(), format_hr(c.hazard_ratio), format_p(c.p_value)));
        }
    }

    let header = ("Independent Variable", "Hazard Ratio", "p-value");
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(header.0.len());
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(header.1.len());
    let mut out = format!("{:<w0$}  {:<w1$}  {}\n", header.0, header.1, header.2);
    for (a, b, c) in &rows {
        out.push_str(&format!("{a:<w0$}  {b:<w1$}  {c}\n"));
    }
    out.push_str(&format!(
        "\nrows = {}, events = {}, log-likelihood = {:.4}, iterations = {}, converged = {}{}\n",
        fit.n_rows,
        fit.n_events,
        fit.log_likelihood,
        fit.iterations,
        fit.converged,
        if fit.ridge_penalized { ", ridge-penalized (separation)" } else { "" }
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survival::fit::Coefficient;

    #[test]
    fn p_value_rendering() {
        assert_eq!(format_p(0.0004), "p < .001");
        assert_eq!(format_p(0.06), "p = .06");
        assert_eq!(format_p(0.43), "n.s.");
        assert_eq!(format_p(0.10), "p = .10");
        assert_eq!(format_p(0.004), "p = .004");
    }

    #[test]
    fn hr_rendering() {
        assert_eq!(format_hr(0.97), ".97");
        assert_eq!(format_hr(1.7), "1.7");
        assert_eq!(format_hr(0.6), ".6");
        assert_eq!(format_hr(0.8912), ".89");
    }

    #[test]
    fn rows_follow_fixed_order() {
        let c = |name: &str, hr: f64, p: f64| Coefficient {
            name: name.into(),
            coefficient: hr.ln(),
            hazard_ratio: hr,
            standard_error: 0.1,
            wald_z: 1.0,
            p_value: p,
        };
        let fit = SurvivalFit {
            coefficients: vec![
                c("intercept", 0.1, 0.0),
                c("pair", 0.6, 0.06),
                c("malfunction", 1.7, 0.0001),
                c("week_3", 2.0, 0.5),
            ],
            log_likelihood: -10.0,
            n_rows: 100,
            n_events: 10,
            converged: true,
            iterations: 5,
            ridge_penalized: false,
            ll_trace: vec![],
        };
        let t = report_table(&fit);
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("Independent Variable"));
        assert!(lines[1].starts_with("Malfunction") && lines[1].ends_with("p < .001"));
        assert!(lines[2].starts_with("Pair") && lines[2].ends_with("p = .06"));
        assert!(!t.contains("week_3") && !t.contains("intercept"));
    }
}
