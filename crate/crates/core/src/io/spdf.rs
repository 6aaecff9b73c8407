//! SPDF frame container.
//!
//! Layout, little-endian throughout:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `SPDF`                   |
//! | 4      | 2    | format version (currently 1)   |
//! | 6      | 2    | width                          |
//! | 8      | 2    | height                         |
//! | 10     | 8    | frame count                    |
//! | 18     | 1    | bit depth, 1 or 8              |
//! | 19     | 16   | reserved, zero                 |
//!
//! The payload follows at byte 35: `frame_count` frames of `frame_stride` bytes.
//! 8-bit frames are row-major, one byte per pixel. 1-bit frames are row-major
//! with each row padded to `ceil(width / 8)` bytes; pixel `col` of a row is bit
//! `col % 8` (least significant first) of byte `col / 8`.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{BitDepth, FrameBuffer};

pub const MAGIC: [u8; 4] = *b"SPDF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 35;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub version: u16,
    pub width: u16,
    pub height: u16,
    pub frame_count: u64,
    pub bit_depth: BitDepth,
}

impl FrameHeader {
    pub fn new(width: u16, height: u16, bit_depth: BitDepth) -> Self {
        FrameHeader {
            version: VERSION,
            width,
            height,
            frame_count: 0,
            bit_depth,
        }
    }

    pub fn frame_stride(&self) -> usize {
        self.bit_depth.frame_stride(self.width, self.height)
    }

    /// Expected total file size.
    pub fn file_len(&self) -> u64 {
        HEADER_LEN as u64 + self.frame_count * self.frame_stride() as u64
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6..8].copy_from_slice(&self.width.to_le_bytes());
        b[8..10].copy_from_slice(&self.height.to_le_bytes());
        b[10..18].copy_from_slice(&self.frame_count.to_le_bytes());
        b[18] = self.bit_depth.bits();
        b
    }

    pub fn decode(b: &[u8; HEADER_LEN]) -> Result<Self> {
        if b[0..4] != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected \"SPDF\"",
                String::from_utf8_lossy(&b[0..4])
            )));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let header = FrameHeader {
            version,
            width: u16::from_le_bytes([b[6], b[7]]),
            height: u16::from_le_bytes([b[8], b[9]]),
            frame_count: u64::from_le_bytes(b[10..18].try_into().unwrap()),
            bit_depth: BitDepth::try_from(b[18])?,
        };
        if header.width == 0 || header.height == 0 {
            return Err(Error::Format("zero frame dimension".into()));
        }
        Ok(header)
    }
}

/// Appends the payload encoding of `frame` to `out`.
pub fn pack_frame(frame: &FrameBuffer, out: &mut Vec<u8>) {
    let w = frame.width() as usize;
    match frame.bit_depth() {
        BitDepth::Eight => out.extend_from_slice(frame.values()),
        BitDepth::One => {
            for row in frame.values().chunks_exact(w) {
                for bits in row.chunks(8) {
                    let mut byte = 0u8;
                    for (k, &v) in bits.iter().enumerate() {
                        byte |= (v & 1) << k;
                    }
                    out.push(byte);
                }
            }
        }
    }
}

/// Decodes one frame payload.
pub fn unpack_frame(
    bytes: &[u8],
    width: u16,
    height: u16,
    bit_depth: BitDepth,
    index: u64,
) -> Result<FrameBuffer> {
    let stride = bit_depth.frame_stride(width, height);
    if bytes.len() != stride {
        return Err(Error::Format(format!(
            "frame payload is {} bytes, expected {stride}",
            bytes.len()
        )));
    }
    let values = match bit_depth {
        BitDepth::Eight => bytes.to_vec(),
        BitDepth::One => {
            let w = width as usize;
            let row_bytes = w.div_ceil(8);
            let mut values = Vec::with_capacity(w * height as usize);
            for row in bytes.chunks_exact(row_bytes) {
                values.extend((0..w).map(|c| (row[c / 8] >> (c % 8)) & 1));
            }
            values
        }
    };
    FrameBuffer::from_values(width, height, bit_depth, index, values)
}

/// Streaming SPDF writer. The frame count is patched into the header by
/// [`FrameWriter::finish`].
pub struct FrameWriter<W: Write + Seek> {
    inner: W,
    header: FrameHeader,
    buf: Vec<u8>,
}

impl FrameWriter<BufWriter<File>> {
    pub fn create(path: &Path, width: u16, height: u16, bit_depth: BitDepth) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        FrameWriter::new(BufWriter::new(file), width, height, bit_depth)
    }
}

impl<W: Write + Seek> FrameWriter<W> {
    pub fn new(mut inner: W, width: u16, height: u16, bit_depth: BitDepth) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format("zero frame dimension".into()));
        }
        let header = FrameHeader::new(width, height, bit_depth);
        inner.write_all(&header.encode())?;
        Ok(FrameWriter {
            inner,
            header,
            buf: Vec::with_capacity(header.frame_stride()),
        })
    }

    pub fn header(&self) -> &FrameHeader {
        &self.header
    }

    pub fn frames_written(&self) -> u64 {
        self.header.frame_count
    }

    pub fn write_frame(&mut self, frame: &FrameBuffer) -> Result<()> {
        let expected = (self.header.width, self.header.height);
        if frame.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: frame.shape(),
            });
        }
        if frame.bit_depth() != self.header.bit_depth {
            return Err(Error::BitDepth {
                expected: self.header.bit_depth.bits(),
                found: frame.bit_depth().bits(),
            });
        }
        self.buf.clear();
        pack_frame(frame, &mut self.buf);
        self.inner.write_all(&self.buf)?;
        self.header.frame_count += 1;
        Ok(())
    }

    /// Rewrites the header with the final frame count and returns the sink.
    pub fn finish(mut self) -> Result<W> {
        self.inner.seek(SeekFrom::Start(0))?;
        self.inner.write_all(&self.header.encode())?;
        self.inner.seek(SeekFrom::End(0))?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Sequential SPDF reader; frames are decoded one at a time.
pub struct FrameReader<R: Read> {
    inner: R,
    header: FrameHeader,
    next: u64,
    buf: Vec<u8>,
}

impl FrameReader<BufReader<File>> {
    /// Opens a file and checks its size against the header.
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let reader = FrameReader::new(BufReader::with_capacity(1 << 20, file))?;
        let expected = reader.header.file_len();
        if len < expected {
            return Err(Error::Format(format!(
                "truncated payload: {len} bytes, header promises {expected}"
            )));
        }
        if len > expected {
            return Err(Error::Format(format!(
                "{} trailing bytes after the last frame",
                len - expected
            )));
        }
        Ok(reader)
    }
}

impl<R: Read> FrameReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut raw = [0u8; HEADER_LEN];
        inner.read_exact(&mut raw).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::Format("file shorter than the header".into()),
            _ => Error::Stream(e),
        })?;
        let header = FrameHeader::decode(&raw)?;
        Ok(FrameReader {
            inner,
            buf: vec![0; header.frame_stride()],
            header,
            next: 0,
        })
    }

    pub fn header(&self) -> &FrameHeader {
        &self.header
    }

    /// Index of the next frame to be returned.
    pub fn position(&self) -> u64 {
        self.next
    }

    /// Fails unless the stream has the given bit depth.
    pub fn expect_bit_depth(&self, depth: BitDepth) -> Result<()> {
        if self.header.bit_depth != depth {
            return Err(Error::BitDepth {
                expected: depth.bits(),
                found: self.header.bit_depth.bits(),
            });
        }
        Ok(())
    }

    pub fn read_frame(&mut self) -> Result<Option<FrameBuffer>> {
        if self.next == self.header.frame_count {
            return Ok(None);
        }
        self.inner
            .read_exact(&mut self.buf)
            .map_err(|e| match e.kind() {
                ErrorKind::UnexpectedEof => Error::Format(format!(
                    "truncated payload: frame {} of {} is incomplete",
                    self.next, self.header.frame_count
                )),
                _ => Error::Stream(e),
            })?;
        let frame = unpack_frame(
            &self.buf,
            self.header.width,
            self.header.height,
            self.header.bit_depth,
            self.next,
        )?;
        self.next += 1;
        Ok(Some(frame))
    }
}

impl<R: Read + Seek> FrameReader<R> {
    /// Positions the reader so that the next frame returned is `index`.
    pub fn seek_frame(&mut self, index: u64) -> Result<()> {
        if index > self.header.frame_count {
            return Err(Error::Format(format!(
                "frame {index} is beyond the {} stored frames",
                self.header.frame_count
            )));
        }
        let pos = HEADER_LEN as u64 + index * self.header.frame_stride() as u64;
        self.inner.seek(SeekFrom::Start(pos))?;
        self.next = index;
        Ok(())
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<FrameBuffer>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_frame().transpose()
    }
}

/// Writes all frames to `path`; returns the number written.
pub fn write_stream<I>(
    path: &Path,
    width: u16,
    height: u16,
    bit_depth: BitDepth,
    frames: I,
) -> Result<u64>
where
    I: IntoIterator<Item = FrameBuffer>,
{
    let mut w = FrameWriter::create(path, width, height, bit_depth)?;
    for f in frames {
        w.write_frame(&f)?;
    }
    let n = w.frames_written();
    w.finish()?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn round_trip(frames: &[FrameBuffer], w: u16, h: u16, d: BitDepth) -> Vec<u8> {
        let mut wr = FrameWriter::new(Cursor::new(Vec::new()), w, h, d).unwrap();
        for f in frames {
            wr.write_frame(f).unwrap();
        }
        let bytes = wr.finish().unwrap().into_inner();
        let back: Vec<_> = FrameReader::new(Cursor::new(&bytes))
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(back, frames);
        bytes
    }

    #[test]
    fn empty_stream_is_header_only() {
        let bytes = round_trip(&[], 4, 4, BitDepth::One);
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(&bytes[0..4], b"SPDF");
        assert!(bytes[19..].iter().all(|&b| b == 0));
    }

    #[test]
    fn single_pixel_layout() {
        let f = FrameBuffer::binary(4, 4, 0, &[(1, 2)]);
        let bytes = round_trip(std::slice::from_ref(&f), 4, 4, BitDepth::One);
        assert_eq!(&bytes[HEADER_LEN..], &[0x00, 0x00, 0x02, 0x00]);
        assert_eq!(u64::from_le_bytes(bytes[10..18].try_into().unwrap()), 1);
        assert_eq!(bytes[18], 1);
    }

    #[test]
    fn odd_width_rows_are_padded() {
        let f = FrameBuffer::binary(9, 2, 0, &[(8, 0), (0, 1)]);
        let bytes = round_trip(std::slice::from_ref(&f), 9, 2, BitDepth::One);
        assert_eq!(&bytes[HEADER_LEN..], &[0x00, 0x01, 0x01, 0x00]);
    }

    #[test]
    fn rejects_corruption() {
        let f = FrameBuffer::binary(4, 4, 0, &[(1, 2)]);
        let g = FrameBuffer::binary(4, 4, 1, &[(1, 2)]);
        let bytes = round_trip(&[f, g], 4, 4, BitDepth::One);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(FrameReader::new(Cursor::new(&bad)), Err(Error::Format(_))));

        let short = &bytes[..bytes.len() - 1];
        let res: Result<Vec<_>> = FrameReader::new(Cursor::new(short)).unwrap().collect();
        assert!(matches!(res, Err(Error::Format(m)) if m.contains("truncated")));

        let r = FrameReader::new(Cursor::new(&bytes)).unwrap();
        assert!(matches!(
            r.expect_bit_depth(BitDepth::Eight),
            Err(Error::BitDepth { expected: 8, found: 1 })
        ));
    }

    #[test]
    fn writer_rejects_mismatched_frames() {
        let mut wr = FrameWriter::new(Cursor::new(Vec::new()), 4, 4, BitDepth::One).unwrap();
        let eight = FrameBuffer::zeroed(4, 4, BitDepth::Eight, 0);
        assert!(matches!(wr.write_frame(&eight), Err(Error::BitDepth { .. })));
        let wide = FrameBuffer::zeroed(5, 4, BitDepth::One, 0);
        assert!(matches!(wr.write_frame(&wide), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn seek_then_read() {
        let frames: Vec<_> = (0..5)
            .map(|i| FrameBuffer::binary(4, 4, i, &[(i as u32 % 4, 0)]))
            .collect();
        let bytes = round_trip(&frames, 4, 4, BitDepth::One);
        let mut r = FrameReader::new(Cursor::new(&bytes)).unwrap();
        r.seek_frame(3).unwrap();
        assert_eq!(r.read_frame().unwrap().unwrap(), frames[3]);
    }
}
