//! Report layout: free text for people, then a `key: value` block between
//! fixed markers for machines.

use std::fmt::{self, Display, Write as _};

use minvec::error::Error;

pub const BEGIN: &str = "--- BEGIN REPORT ---";
pub const END: &str = "--- END REPORT ---";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    NotApplicable,
    Skipped,
    Fail,
}

impl Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::NotApplicable => "N/A",
            Status::Skipped => "SKIPPED",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Section {
    pub name: String,
    pub status: Status,
    pub notes: Vec<String>,
    pub fields: Vec<(String, String)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            status: Status::Pass,
            notes: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl Display) {
        self.fields.push((key.to_string(), value.to_string()));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Runs a check; budget overruns become SKIPPED and construction failures
    /// become FAIL, anything else aborts the command.
    pub fn run(
        name: impl Into<String>,
        f: impl FnOnce(&mut Section) -> Result<Status, Error>,
    ) -> Result<Section, Error> {
        let mut s = Section::new(name);
        match f(&mut s) {
            Ok(status) => s.status = status,
            Err(e @ Error::Budget { .. }) => {
                s.status = Status::Skipped;
                s.note(e.to_string());
            }
            Err(e @ Error::ConstructionFailure(_)) => {
                s.status = Status::Fail;
                s.note(e.to_string());
            }
            Err(e) => return Err(e),
        }
        Ok(s)
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub input: String,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(command: &str, input: impl Into<String>) -> Self {
        Report {
            command: command.to_string(),
            input: input.into(),
            sections: Vec::new(),
        }
    }

    pub fn status(&self) -> Status {
        match self.sections.iter().map(|s| s.status).max() {
            Some(Status::NotApplicable) | None => Status::Pass,
            Some(s) => s,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status() {
            Status::Pass | Status::NotApplicable => 0,
            Status::Fail => 1,
            Status::Skipped => 4,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== minvec {} {} ==", self.command, self.input);
        for s in &self.sections {
            let _ = writeln!(out, "[{}] {}", s.name, s.status);
            for n in &s.notes {
                let _ = writeln!(out, "  {n}");
            }
        }
        let _ = writeln!(out, "{BEGIN}");
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "input: {}", self.input);
        for s in &self.sections {
            let _ = writeln!(out, "{}.status: {}", s.name, s.status);
            for (k, v) in &s.fields {
                let _ = writeln!(out, "{}.{k}: {v}", s.name);
            }
        }
        let _ = writeln!(out, "overall: {}", self.status());
        let _ = writeln!(out, "{END}");
        out
    }
}

/// Exit code for an error that stopped a command.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidInput(_) => 2,
        Error::Budget { .. } => 4,
        _ => 3,
    }
}
