/** Binary trace/label file writers.
 *
 * Trace files: a 24-byte little-endian header (magic "ATRC", u32 version,
 * u64 sample count, u64 neuron count) followed by float32 values in
 * row-major order. Label files: a 16-byte header (magic "ALBL", u32
 * version, u64 sample count) followed by one (true, predicted) u32 pair
 * per sample. Byte-compatible with the consumer toolkit's loaders.
 */

import * as fs from "fs";

import { IoError, ShapeMismatchError, ValidationError } from "./errors";

export const TRACE_MAGIC = "ATRC";
export const LABEL_MAGIC = "ALBL";
export const FORMAT_VERSION = 1;
export const TRACE_HEADER_BYTES = 24;
export const LABEL_HEADER_BYTES = 16;

const U32_MAX = 0xffffffff;

/** Serialize one trace matrix to the binary layout. */
export function encodeTraces(values: Float32Array, nSamples: number, nNeurons: number): Buffer {
  if (!Number.isInteger(nSamples) || nSamples < 1) {
    throw new ValidationError(`sample count must be a positive integer, got ${nSamples}`);
  }
  if (!Number.isInteger(nNeurons) || nNeurons < 1) {
    throw new ValidationError(`neuron count must be a positive integer, got ${nNeurons}`);
  }
  if (values.length !== nSamples * nNeurons) {
    throw new ShapeMismatchError(
      `expected ${nSamples} x ${nNeurons} = ${nSamples * nNeurons} values, got ${values.length}`,
    );
  }
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new ValidationError(`trace value at flat index ${i} is not finite`);
    }
  }
  const out = Buffer.allocUnsafe(TRACE_HEADER_BYTES + values.length * 4);
  out.write(TRACE_MAGIC, 0, "ascii");
  out.writeUInt32LE(FORMAT_VERSION, 4);
  out.writeBigUInt64LE(BigInt(nSamples), 8);
  out.writeBigUInt64LE(BigInt(nNeurons), 16);
  for (let i = 0; i < values.length; i++) {
    out.writeFloatLE(values[i], TRACE_HEADER_BYTES + i * 4);
  }
  return out;
}

/** Serialize aligned true/predicted label vectors to the binary layout. */
export function encodeLabels(trueLabels: ArrayLike<number>, predictedLabels: ArrayLike<number>): Buffer {
  const n = trueLabels.length;
  if (n < 1) {
    throw new ValidationError("label vectors must not be empty");
  }
  if (predictedLabels.length !== n) {
    throw new ShapeMismatchError(
      `true labels have ${n} entries, predicted have ${predictedLabels.length}`,
    );
  }
  const out = Buffer.allocUnsafe(LABEL_HEADER_BYTES + n * 8);
  out.write(LABEL_MAGIC, 0, "ascii");
  out.writeUInt32LE(FORMAT_VERSION, 4);
  out.writeBigUInt64LE(BigInt(n), 8);
  for (let i = 0; i < n; i++) {
    const t = trueLabels[i];
    const p = predictedLabels[i];
    if (!Number.isInteger(t) || t < 0 || t > U32_MAX) {
      throw new ValidationError(`true label at row ${i} is not a u32: ${t}`);
    }
    if (!Number.isInteger(p) || p < 0 || p > U32_MAX) {
      throw new ValidationError(`predicted label at row ${i} is not a u32: ${p}`);
    }
    out.writeUInt32LE(t, LABEL_HEADER_BYTES + i * 8);
    out.writeUInt32LE(p, LABEL_HEADER_BYTES + i * 8 + 4);
  }
  return out;
}

function writeFile(path: string, data: Buffer): void {
  try {
    fs.writeFileSync(path, data);
  } catch (err) {
    throw new IoError(`cannot write ${path}: ${(err as Error).message}`);
  }
}

/** Write one trace matrix to a .atrc file. */
export function writeTraceFile(
  path: string,
  values: Float32Array,
  nSamples: number,
  nNeurons: number,
): void {
  writeFile(path, encodeTraces(values, nSamples, nNeurons));
}

/** Write aligned label vectors to a .albl file. */
export function writeLabelFile(
  path: string,
  trueLabels: ArrayLike<number>,
  predictedLabels: ArrayLike<number>,
): void {
  writeFile(path, encodeLabels(trueLabels, predictedLabels));
}
