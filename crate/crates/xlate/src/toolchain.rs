//! Locating compilers, interpreters and coverage tools.
//!
//! Each tool is taken from its environment variable when set, otherwise
//! searched for on `PATH`.

use std::env;
use std::path::{Path, PathBuf};

use xlate_core::harness::HarnessError;
use xlate_core::LanguageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tool {
    Cc,
    Cxx,
    Gcov,
    Go,
    Javac,
    Java,
    Python,
}

impl Tool {
    pub const ALL: [Tool; 7] = [Tool::Cc, Tool::Cxx, Tool::Gcov, Tool::Go, Tool::Javac, Tool::Java, Tool::Python];

    pub fn env_var(self) -> &'static str {
        match self {
            Tool::Cc => "XLATE_CC",
            Tool::Cxx => "XLATE_CXX",
            Tool::Gcov => "XLATE_GCOV",
            Tool::Go => "XLATE_GO",
            Tool::Javac => "XLATE_JAVAC",
            Tool::Java => "XLATE_JAVA",
            Tool::Python => "XLATE_PYTHON",
        }
    }

    fn candidates(self) -> &'static [&'static str] {
        match self {
            Tool::Cc => &["gcc", "cc", "clang"],
            Tool::Cxx => &["g++", "c++", "clang++"],
            Tool::Gcov => &["gcov"],
            Tool::Go => &["go"],
            Tool::Javac => &["javac"],
            Tool::Java => &["java"],
            Tool::Python => &["python3", "python"],
        }
    }
}

/// Tools a language needs to compile and run.
pub fn required_tools(lang: LanguageId) -> &'static [Tool] {
    match lang {
        LanguageId::C => &[Tool::Cc],
        LanguageId::Cpp => &[Tool::Cxx],
        LanguageId::Go => &[Tool::Go],
        LanguageId::Java => &[Tool::Javac, Tool::Java],
        LanguageId::Python => &[Tool::Python],
    }
}

#[derive(Debug, Clone, Default)]
pub struct Toolchains {
    paths: Vec<(Tool, PathBuf)>,
    /// JaCoCo agent jar and CLI jar, for Java coverage.
    pub jacoco: Option<(PathBuf, PathBuf)>,
}

impl Toolchains {
    pub fn discover() -> Self {
        let mut found = Toolchains::default();
        for tool in Tool::ALL {
            let path = match env::var_os(tool.env_var()) {
                // An override naming a missing file counts as not installed.
                Some(p) if !p.is_empty() => {
                    let p = PathBuf::from(p);
                    if p.components().count() > 1 {
                        p.is_file().then_some(p)
                    } else {
                        find_on_path(&p.to_string_lossy())
                    }
                }
                _ => tool.candidates().iter().find_map(|name| find_on_path(name)),
            };
            if let Some(path) = path {
                found.paths.push((tool, path));
            }
        }
        if let (Some(agent), Some(cli)) = (env::var_os("XLATE_JACOCO_AGENT"), env::var_os("XLATE_JACOCO_CLI")) {
            found.jacoco = Some((agent.into(), cli.into()));
        }
        found
    }

    /// A set with no tools at all.
    pub fn empty() -> Self {
        Toolchains::default()
    }

    pub fn with(mut self, tool: Tool, path: impl Into<PathBuf>) -> Self {
        self.paths.retain(|(t, _)| *t != tool);
        self.paths.push((tool, path.into()));
        self
    }

    pub fn without(mut self, tool: Tool) -> Self {
        self.paths.retain(|(t, _)| *t != tool);
        self
    }

    pub fn get(&self, tool: Tool) -> Option<&Path> {
        self.paths.iter().find(|(t, _)| *t == tool).map(|(_, p)| p.as_path())
    }

    pub fn require(&self, tool: Tool) -> Result<&Path, HarnessError> {
        self.get(tool)
            .ok_or_else(|| HarnessError::ToolchainMissing(format!("{tool:?} not found (set {})", tool.env_var())))
    }

    pub fn supports(&self, lang: LanguageId) -> bool {
        self.missing_for(lang).is_none()
    }

    /// Describes the first tool `lang` needs that is not available.
    pub fn missing_for(&self, lang: LanguageId) -> Option<String> {
        required_tools(lang).iter().find(|t| self.get(**t).is_none()).map(|t| {
            format!("{} toolchain missing: {:?} not found (set {})", lang.display_name(), t, t.env_var())
        })
    }
}

fn find_on_path(name: &str) -> Option<PathBuf> {
    let path = env::var_os("PATH")?;
    env::split_paths(&path).map(|dir| dir.join(name)).find(|p| is_executable(p))
}

#[cfg(unix)]
fn is_executable(p: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    p.metadata().map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0).unwrap_or(false)
}

#[cfg(not(unix))]
fn is_executable(p: &Path) -> bool {
    p.is_file()
}
