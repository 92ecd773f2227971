use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::provider::protocol::{decode_reply, encode_request};
use crate::provider::{NextStateProvider, SuccessorList, SuccessorQuery};

struct Connection {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A generative provider backed by a child process speaking
/// [`crate::provider::protocol`] on its stdin and stdout.
///
/// Requests on one provider are serialized; use one provider per worker for
/// concurrent decoding.
pub struct ProcessProvider {
    child: Child,
    conn: Mutex<Connection>,
}

impl ProcessProvider {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ProcessProvider {
            child,
            conn: Mutex::new(Connection { stdin, stdout }),
        })
    }

    /// Spawns `sh -c <command>`.
    pub fn spawn_shell(command: &str) -> Result<Self> {
        Self::spawn("sh", &["-c".to_string(), command.to_string()])
    }
}

impl NextStateProvider for ProcessProvider {
    fn query_successors(&self, query: &SuccessorQuery) -> Result<SuccessorList> {
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| Error::Protocol("provider connection poisoned".into()))?;
        let request = encode_request(query);
        let sent = writeln!(conn.stdin, "{request}").and_then(|_| conn.stdin.flush());
        if sent.is_err() {
            return Err(Error::Protocol("provider process exited".into()));
        }
        let mut line = String::new();
        let n = conn
            .stdout
            .read_line(&mut line)
            .map_err(|e| Error::Protocol(format!("reading reply: {e}")))?;
        if n == 0 {
            return Err(Error::Protocol("provider process exited".into()));
        }
        decode_reply(&line)
    }
}

impl Drop for ProcessProvider {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
