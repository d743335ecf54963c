// Minimal single-channel 8-bit PNG writer/reader for mask export.
//
// Canvas toBlob() produces RGBA PNGs, but mask uploads must be one channel
// of 0/255 values, so the file is assembled by hand. The zlib stream uses
// stored (uncompressed) deflate blocks: output is deterministic, needs no
// compression library, and the reader below can walk it back exactly.

const PNG_SIGNATURE = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    crc = CRC_TABLE[(crc ^ data[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

export function adler32(data: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < data.length; i++) {
    a = (a + data[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

const writeU32 = (out: number[], value: number): void => {
  out.push((value >>> 24) & 0xff, (value >>> 16) & 0xff, (value >>> 8) & 0xff, value & 0xff);
};

const chunk = (type: string, body: Uint8Array): Uint8Array => {
  const typed = new Uint8Array(4 + body.length);
  for (let i = 0; i < 4; i++) typed[i] = type.charCodeAt(i);
  typed.set(body, 4);
  const out: number[] = [];
  writeU32(out, body.length);
  const head = new Uint8Array(out);
  const crcBytes: number[] = [];
  writeU32(crcBytes, crc32(typed));
  const result = new Uint8Array(head.length + typed.length + 4);
  result.set(head, 0);
  result.set(typed, head.length);
  result.set(new Uint8Array(crcBytes), head.length + typed.length);
  return result;
};

// raw scanlines -> zlib stream made of stored deflate blocks
const zlibStored = (raw: Uint8Array): Uint8Array => {
  const MAX_BLOCK = 65535;
  const blockCount = Math.max(1, Math.ceil(raw.length / MAX_BLOCK));
  const out = new Uint8Array(2 + raw.length + blockCount * 5 + 4);
  out[0] = 0x78; // 32K window, deflate
  out[1] = 0x01; // fastest, no preset dict; makes (CMF*256 + FLG) % 31 == 0
  let pos = 2;
  for (let i = 0; i < blockCount; i++) {
    const start = i * MAX_BLOCK;
    const piece = raw.subarray(start, Math.min(start + MAX_BLOCK, raw.length));
    out[pos++] = i === blockCount - 1 ? 1 : 0; // BFINAL, BTYPE=00
    out[pos++] = piece.length & 0xff;
    out[pos++] = piece.length >>> 8;
    out[pos++] = ~piece.length & 0xff;
    out[pos++] = (~piece.length >>> 8) & 0xff;
    out.set(piece, pos);
    pos += piece.length;
  }
  const checksum: number[] = [];
  writeU32(checksum, adler32(raw));
  out.set(new Uint8Array(checksum), pos);
  return out.subarray(0, pos + 4);
};

export function encodeGrayPng(width: number, height: number, pixels: Uint8Array): Uint8Array {
  if (width < 1 || height < 1 || !Number.isInteger(width) || !Number.isInteger(height)) {
    throw new Error(`bad dimensions ${width}x${height}`);
  }
  if (pixels.length !== width * height) {
    throw new Error(`expected ${width * height} pixels, got ${pixels.length}`);
  }
  const ihdr: number[] = [];
  writeU32(ihdr, width);
  writeU32(ihdr, height);
  ihdr.push(8, 0, 0, 0, 0); // 8-bit grayscale, deflate, adaptive, no interlace

  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter: None
    raw.set(pixels.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }

  const parts = [
    PNG_SIGNATURE,
    chunk("IHDR", new Uint8Array(ihdr)),
    chunk("IDAT", zlibStored(raw)),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const file = new Uint8Array(total);
  let pos = 0;
  for (const part of parts) {
    file.set(part, pos);
    pos += part.length;
  }
  return file;
}

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array;
}

const readU32 = (data: Uint8Array, pos: number): number =>
  ((data[pos] << 24) | (data[pos + 1] << 16) | (data[pos + 2] << 8) | data[pos + 3]) >>> 0;

// Reads back the subset this module writes: 8-bit grayscale, filter None,
// stored deflate blocks. Anything else is rejected loudly; masks from other
// encoders are not expected here.
export function decodeGrayPng(data: Uint8Array): GrayImage {
  for (let i = 0; i < 8; i++) {
    if (data[i] !== PNG_SIGNATURE[i]) throw new Error("not a PNG");
  }
  let pos = 8;
  let width = 0;
  let height = 0;
  const idatParts: Uint8Array[] = [];
  while (pos < data.length) {
    const length = readU32(data, pos);
    const type = String.fromCharCode(data[pos + 4], data[pos + 5], data[pos + 6], data[pos + 7]);
    const body = data.subarray(pos + 8, pos + 8 + length);
    if (type === "IHDR") {
      width = readU32(body, 0);
      height = readU32(body, 4);
      if (body[8] !== 8 || body[9] !== 0) {
        throw new Error("only 8-bit grayscale is supported");
      }
      if (body[12] !== 0) throw new Error("interlaced PNG not supported");
    } else if (type === "IDAT") {
      idatParts.push(body);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + length;
  }
  if (width === 0 || height === 0) throw new Error("missing IHDR");

  let zlen = 0;
  for (const part of idatParts) zlen += part.length;
  const stream = new Uint8Array(zlen);
  let zpos = 0;
  for (const part of idatParts) {
    stream.set(part, zpos);
    zpos += part.length;
  }
  if ((stream[0] & 0x0f) !== 8) throw new Error("not a zlib deflate stream");

  const raw = new Uint8Array(height * (width + 1));
  let rawPos = 0;
  let cursor = 2;
  for (;;) {
    const header = stream[cursor];
    if ((header & 0x06) !== 0) {
      throw new Error("compressed deflate blocks not supported here");
    }
    const len = stream[cursor + 1] | (stream[cursor + 2] << 8);
    raw.set(stream.subarray(cursor + 5, cursor + 5 + len), rawPos);
    rawPos += len;
    cursor += 5 + len;
    if (header & 1) break;
  }
  if (rawPos !== raw.length) {
    throw new Error(`scanline payload ${rawPos}, expected ${raw.length}`);
  }

  const pixels = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    if (raw[y * (width + 1)] !== 0) {
      throw new Error("filtered scanlines not supported here");
    }
    pixels.set(raw.subarray(y * (width + 1) + 1, (y + 1) * (width + 1)), y * width);
  }
  return { width, height, pixels };
}

export function bytesEqual(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return false;
  }
  return true;
}
