//! Subprocess execution with a wall-clock limit and capped output capture.

use std::ffi::OsString;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

/// One process to run inside a scratch directory.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub program: PathBuf,
    pub args: Vec<OsString>,
    pub cwd: PathBuf,
    pub env: Vec<(OsString, OsString)>,
    pub stdin: Vec<u8>,
}

impl Invocation {
    pub fn new(program: impl Into<PathBuf>, cwd: &Path) -> Self {
        Invocation { program: program.into(), args: Vec::new(), cwd: cwd.to_path_buf(), env: Vec::new(), stdin: Vec::new() }
    }

    pub fn arg(mut self, a: impl Into<OsString>) -> Self {
        self.args.push(a.into());
        self
    }

    pub fn args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<OsString>,
    {
        self.args.extend(args.into_iter().map(Into::into));
        self
    }

    pub fn env(mut self, k: impl Into<OsString>, v: impl Into<OsString>) -> Self {
        self.env.push((k.into(), v.into()));
        self
    }

    pub fn stdin(mut self, data: impl Into<Vec<u8>>) -> Self {
        self.stdin = data.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub stdout: String,
    pub stderr: String,
    /// Exit status, or the negated signal number when killed by a signal.
    pub exit_code: i32,
    pub timed_out: bool,
    pub duration: Duration,
    pub truncated: bool,
}

impl RunOutput {
    pub fn success(&self) -> bool {
        !self.timed_out && self.exit_code == 0
    }
}

pub fn run(inv: &Invocation, timeout: Duration, cap: usize) -> io::Result<RunOutput> {
    let mut cmd = Command::new(&inv.program);
    cmd.args(&inv.args)
        .current_dir(&inv.cwd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in &inv.env {
        cmd.env(k, v);
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let start = Instant::now();
    let mut child = cmd.spawn()?;

    let stdin_data = inv.stdin.clone();
    let mut stdin = child.stdin.take();
    let writer = thread::spawn(move || {
        if let Some(pipe) = stdin.as_mut() {
            // The child may exit without reading; a broken pipe is not an error here.
            let _ = pipe.write_all(&stdin_data);
        }
        drop(stdin);
    });
    let out = child.stdout.take().map(|p| thread::spawn(move || capture(p, cap)));
    let err = child.stderr.take().map(|p| thread::spawn(move || capture(p, cap)));

    let (status, timed_out) = match wait_until(&mut child, start + timeout)? {
        Some(status) => (status, false),
        None => {
            kill_tree(&mut child);
            (child.wait()?, true)
        }
    };
    let duration = start.elapsed();
    let _ = writer.join();
    let (stdout, t1) = out.map(|h| h.join().unwrap_or_default()).unwrap_or_default();
    let (stderr, t2) = err.map(|h| h.join().unwrap_or_default()).unwrap_or_default();
    Ok(RunOutput {
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        exit_code: exit_code(&status),
        timed_out,
        duration,
        truncated: t1 || t2,
    })
}

/// Polls for exit until `deadline`, backing off from 1 ms to 20 ms.
fn wait_until(child: &mut Child, deadline: Instant) -> io::Result<Option<std::process::ExitStatus>> {
    let mut pause = Duration::from_millis(1);
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        let now = Instant::now();
        if now >= deadline {
            return Ok(None);
        }
        thread::sleep(pause.min(deadline - now));
        pause = (pause * 2).min(Duration::from_millis(20));
    }
}

/// Keeps the first `cap` bytes and drains the rest so the child never blocks.
fn capture(mut pipe: impl Read, cap: usize) -> (Vec<u8>, bool) {
    let mut kept = Vec::new();
    let mut buf = [0u8; 8192];
    let mut truncated = false;
    loop {
        match pipe.read(&mut buf) {
            Ok(0) | Err(_) => break,
            Ok(n) => {
                let room = cap.saturating_sub(kept.len());
                if n > room {
                    truncated = true;
                }
                kept.extend_from_slice(&buf[..n.min(room)]);
            }
        }
    }
    (kept, truncated)
}

#[cfg(unix)]
fn kill_tree(child: &mut Child) {
    // The child leads its own process group; signal the whole group.
    // SAFETY: killpg takes no pointers; a stale group id only yields ESRCH.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut Child) {
    let _ = child.kill();
}

#[cfg(unix)]
fn exit_code(status: &std::process::ExitStatus) -> i32 {
    use std::os::unix::process::ExitStatusExt;
    status.code().unwrap_or_else(|| -status.signal().unwrap_or(1))
}

#[cfg(not(unix))]
fn exit_code(status: &std::process::ExitStatus) -> i32 {
    status.code().unwrap_or(-1)
}
