use fiber_atlas::arcscan::ArcScanError;
use fiber_atlas::topo::TopoError;
use fiber_atlas::varnum::VarnumError;
use fiber_atlas::PolyError;

/// What went wrong, which also fixes the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags or config file.
    Usage,
    /// Malformed map, arc or point cloud, or unreadable files.
    Input,
    /// The numerics gave up.
    Computation,
}

impl Kind {
    pub fn code(self) -> i32 {
        match self {
            Kind::Usage => 2,
            Kind::Input => 3,
            Kind::Computation => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Input => "input",
            Kind::Computation => "computation",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Usage, message: msg.into() }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Input, message: msg.into() }
    }

    pub fn computation(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Computation, message: msg.into() }
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind.name(),
            "message": self.message,
            "exit_code": self.kind.code(),
        })
        .to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("io: {e}"))
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<fiber_atlas::arc::ArcError> for CliError {
    fn from(e: fiber_atlas::arc::ArcError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<VarnumError> for CliError {
    fn from(e: VarnumError) -> Self {
        match e {
            VarnumError::InvalidInput(_) | VarnumError::Poly(_) | VarnumError::Io(_) | VarnumError::Csv(_) => {
                CliError::input(e.to_string())
            }
            _ => CliError::computation(e.to_string()),
        }
    }
}

impl From<TopoError> for CliError {
    fn from(e: TopoError) -> Self {
        match e {
            TopoError::InvalidInput(_) => CliError::input(e.to_string()),
            _ => CliError::computation(e.to_string()),
        }
    }
}

impl From<ArcScanError> for CliError {
    fn from(e: ArcScanError) -> Self {
        match e {
            ArcScanError::Varnum(v) => v.into(),
            ArcScanError::Topo(t) => t.into(),
            ArcScanError::InvalidInput(_)
            | ArcScanError::Arc(_)
            | ArcScanError::Poly(_)
            | ArcScanError::Io(_)
            | ArcScanError::Csv(_) => CliError::input(e.to_string()),
            _ => CliError::computation(e.to_string()),
        }
    }
}
