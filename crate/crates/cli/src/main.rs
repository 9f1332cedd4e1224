use std::process::ExitCode;

use clap::{Parser, Subcommand};
use growthscope_cli::{run_pipeline, AnalyzeArgs, PipelineConfig};

#[derive(Parser)]
#[command(
    name = "growthscope",
    version,
    about = "Multiscale growth-rate analysis of GDP series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write data, report and figures.
    Analyze(AnalyzeArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not failures; bad usage is a
            // config error.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Command::Analyze(args) = cli.command;
    let result = PipelineConfig::resolve(&args).and_then(|config| {
        let analysis = run_pipeline(&config)?;
        Ok((config, analysis))
    });
    match result {
        Ok((config, analysis)) => {
            let r = &analysis.report;
            println!(
                "{}: {} samples, rho_lt {:.4}/yr, {} skeleton lines, {} files in {}",
                r.input.spec,
                r.input.samples,
                r.trend.rho_lt,
                r.skeleton.lines,
                r.files.len() + 1,
                config.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("growthscope: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
