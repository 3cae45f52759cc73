use std::process::ExitCode;

use mpamp_cli::{load_config, presets, resolve_out_dir, run_config, CliError};

const USAGE: &str = "\
mpamp: multi-processor AMP experiment driver

USAGE:
  mpamp run <config.toml | preset> [--out-dir DIR]   execute an experiment
  mpamp validate <config.toml | preset>              static checks only
  mpamp presets [--emit NAME]                        list built-ins / print one

Experiments are TOML files; see README for the schema. Built-in presets can
be used anywhere a config path is accepted. The output directory defaults to
the config's output_dir (override with --out-dir or MPAMP_OUT_DIR).
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("run") => cmd_run(&args[1..]),
        Some("validate") => cmd_validate(&args[1..]),
        Some("presets") => cmd_presets(&args[1..]),
        Some("--help") | Some("-h") | None => {
            print!("{USAGE}");
            ExitCode::SUCCESS
        }
        Some(other) => {
            eprintln!("unknown subcommand `{other}`\n\n{USAGE}");
            ExitCode::from(2)
        }
    }
}

fn cmd_run(args: &[String]) -> ExitCode {
    let mut source = None;
    let mut out_dir = None;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--out-dir" => match it.next() {
                Some(dir) => out_dir = Some(dir.clone()),
                None => {
                    eprintln!("--out-dir needs a value");
                    return ExitCode::from(2);
                }
            },
            _ if source.is_none() => source = Some(arg.clone()),
            other => {
                eprintln!("unexpected argument `{other}`");
                return ExitCode::from(2);
            }
        }
    }
    let Some(source) = source else {
        eprintln!("run needs a config path or preset name\n\n{USAGE}");
        return ExitCode::from(2);
    };
    let cfg = match load_config(&source) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = resolve_out_dir(out_dir.as_deref(), &cfg);
    match run_config(&cfg, &dir) {
        Ok(artifacts) => {
            for file in artifacts.files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ CliError::Invalid(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_validate(args: &[String]) -> ExitCode {
    let Some(source) = args.first() else {
        eprintln!("validate needs a config path\n\n{USAGE}");
        return ExitCode::from(2);
    };
    let cfg = match load_config(source) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    let diags = cfg.validate();
    if diags.is_empty() {
        println!("ok: {source} ({})", cfg.algorithm.as_str());
        ExitCode::SUCCESS
    } else {
        for d in &diags {
            println!("{d}");
        }
        ExitCode::from(2)
    }
}

fn cmd_presets(args: &[String]) -> ExitCode {
    if let Some(pos) = args.iter().position(|a| a == "--emit") {
        let Some(name) = args.get(pos + 1) else {
            eprintln!("--emit needs a preset name");
            return ExitCode::from(2);
        };
        match presets::find(name) {
            Some(p) => {
                print!("{}", p.toml);
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("no such preset `{name}`");
                ExitCode::FAILURE
            }
        }
    } else {
        for p in presets::PRESETS {
            println!("{:<10} {}", p.name, p.summary);
        }
        ExitCode::SUCCESS
    }
}
