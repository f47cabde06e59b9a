/** Minimal float64 WAV (RIFF, IEEE float) writer: the lossless wire format
 * the bindings use to ship sample arrays across the process boundary. */

import { writeFileSync } from "node:fs";

const WAVE_FORMAT_IEEE_FLOAT = 3;

export function writeWavFloat64(path: string, samples: Float64Array, sampleRate: number): void {
  const dataBytes = samples.length * 8;
  const buf = Buffer.alloc(44 + dataBytes);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + dataBytes, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(WAVE_FORMAT_IEEE_FLOAT, 20);
  buf.writeUInt16LE(1, 22); // mono
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 8, 28);
  buf.writeUInt16LE(8, 32);
  buf.writeUInt16LE(64, 34);
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(dataBytes, 40);
  for (let i = 0; i < samples.length; i++) {
    buf.writeDoubleLE(samples[i], 44 + 8 * i);
  }
  writeFileSync(path, buf);
}
