//! Blocking client for the line protocol.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use crate::protocol::{parse_response, Request, Response};

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
        })
    }

    /// Sends raw bytes as one request and returns the response line
    /// without its terminator. A `\n` is appended.
    pub fn send_raw(&mut self, line: &[u8]) -> io::Result<String> {
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line);
        buf.push(b'\n');
        self.writer.write_all(&buf)?;
        self.writer.flush()?;
        let mut response = String::new();
        if self.reader.read_line(&mut response)? == 0 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "server closed the connection",
            ));
        }
        let trimmed = response.trim_end_matches(['\r', '\n']).len();
        response.truncate(trimmed);
        Ok(response)
    }

    pub fn send(&mut self, request: &Request) -> io::Result<Response> {
        let line = self.send_raw(request.to_string().as_bytes())?;
        parse_response(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
