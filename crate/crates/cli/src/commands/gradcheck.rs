use std::process::ExitCode;

use cgrnn_core::error::{Error, Result};
use cgrnn_core::gradcheck::GRAD_TOLERANCE;
use cgrnn_core::model::gradsuite::{check_full_model, run_layer_suite};

#[derive(clap::Args)]
pub struct GradcheckArgs {
    /// Suite size: tiny (fast per-layer sizes) or default-small (adds the
    /// assembled model at the mel-filterbank frame width).
    #[arg(long, default_value = "tiny")]
    config: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Test hook: corrupt the named layer's analytic gradient to exercise
    /// the failure exit path.
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

pub fn run(args: GradcheckArgs) -> Result<ExitCode> {
    let full_model = match args.config.as_str() {
        "tiny" => false,
        "default-small" => true,
        other => {
            return Err(Error::Config(format!(
                "unknown gradcheck config '{other}' (expected tiny|default-small)"
            )))
        }
    };

    let mut checks = run_layer_suite(args.seed, args.inject_fault.as_deref())?;
    if full_model {
        checks.push(check_full_model(args.seed, true, 4)?);
    }

    println!("{:<12} {:>14}  {:<20} status", "layer", "worst_rel_err", "worst_at");
    let mut all_pass = true;
    for check in &checks {
        println!(
            "{:<12} {:>14.3e}  {:<20} {}",
            check.layer,
            check.worst_rel,
            format!("{}[{}]", check.worst_tensor, check.worst_index),
            if check.pass { "pass" } else { "FAIL" }
        );
        all_pass &= check.pass;
    }
    if all_pass {
        println!("all layers within {GRAD_TOLERANCE:.0e}");
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.layer).collect();
        eprintln!("gradient check failed: {}", failed.join(", "));
        Ok(ExitCode::from(4))
    }
}
