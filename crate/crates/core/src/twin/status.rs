//! Plain-text counters page over TCP.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

pub struct StatusServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    worker: JoinHandle<()>,
}

impl StatusServer {
    /// Serves the current contents of `page` to every connection.
    pub fn start(addr: &str, page: Arc<Mutex<String>>) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let st = stop.clone();
        let worker = std::thread::Builder::new().name("status".into()).spawn(move || {
            while !st.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((mut conn, _)) => {
                        let _ = conn.set_nonblocking(false);
                        let _ = conn.set_read_timeout(Some(Duration::from_millis(200)));
                        let mut buf = [0u8; 1024];
                        let _ = conn.read(&mut buf);
                        let body = page.lock().unwrap().clone();
                        let _ = write!(
                            conn,
                            "HTTP/1.1 200 OK\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                            body.len()
                        );
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(20)),
                    Err(e) => {
                        log::warn!("status accept failed: {e}");
                        std::thread::sleep(Duration::from_millis(20));
                    }
                }
            }
        })?;
        Ok(StatusServer { addr, stop, worker })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.worker.join();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpStream;

    #[test]
    fn serves_current_page() {
        let page = Arc::new(Mutex::new("messages_in 3\n".to_string()));
        let s = StatusServer::start("127.0.0.1:0", page.clone()).unwrap();
        let fetch = || {
            let mut c = TcpStream::connect(s.local_addr()).unwrap();
            c.write_all(b"GET / HTTP/1.0\r\n\r\n").unwrap();
            let mut out = String::new();
            c.read_to_string(&mut out).unwrap();
            out
        };
        assert!(fetch().ends_with("messages_in 3\n"));
        *page.lock().unwrap() = "messages_in 4\n".into();
        assert!(fetch().ends_with("messages_in 4\n"));
        s.stop();
    }
}
