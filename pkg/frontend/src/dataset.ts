/** CSV dataset loading.
 *
 * Datasets are label-first CSV: each row is `label,f0,f1,...,fk`. An
 * optional header line is skipped when its first field is not numeric.
 * Features are parsed as float64 and later narrowed to float32 at the
 * model input; labels must be non-negative integers.
 */

import * as fs from "fs";

import { MissingFileError, IoError, ShapeMismatchError, ValidationError } from "./errors";

export interface Dataset {
  /** Row-major feature matrix, nSamples x nFeatures. */
  features: Float32Array;
  /** True class label per row. */
  labels: Uint32Array;
  nSamples: number;
  nFeatures: number;
}

function parseLine(line: string, lineNo: number, nFeatures: number, featuresOut: Float32Array, row: number, labelsOut: Uint32Array): void {
  const parts = line.split(",");
  if (parts.length !== nFeatures + 1) {
    throw new ShapeMismatchError(
      `line ${lineNo}: expected ${nFeatures + 1} fields, got ${parts.length}`,
    );
  }
  const label = Number(parts[0]);
  if (!Number.isInteger(label) || label < 0) {
    throw new ValidationError(`line ${lineNo}: label must be a non-negative integer, got ${parts[0].trim()}`);
  }
  labelsOut[row] = label;
  const base = row * nFeatures;
  for (let j = 0; j < nFeatures; j++) {
    const v = Number(parts[j + 1]);
    if (!Number.isFinite(v)) {
      throw new ValidationError(`line ${lineNo}: feature ${j} is not a finite number, got ${parts[j + 1].trim()}`);
    }
    featuresOut[base + j] = v;
  }
}

/** Load a label-first CSV dataset from disk. */
export function loadDataset(path: string): Dataset {
  if (!fs.existsSync(path)) {
    throw new MissingFileError(`dataset file not found: ${path}`);
  }
  let text: string;
  try {
    text = fs.readFileSync(path, "utf8");
  } catch (err) {
    throw new IoError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new ValidationError(`dataset file is empty: ${path}`);
  }
  // Header detection: a leading line whose first field is non-numeric.
  let start = 0;
  const firstField = lines[0].split(",")[0];
  if (firstField.trim().length === 0 || Number.isNaN(Number(firstField))) {
    start = 1;
  }
  const nSamples = lines.length - start;
  if (nSamples < 1) {
    throw new ValidationError(`dataset has a header but no data rows: ${path}`);
  }
  const nFeatures = lines[start].split(",").length - 1;
  if (nFeatures < 1) {
    throw new ValidationError(`line ${start + 1}: rows need a label and at least one feature`);
  }
  const features = new Float32Array(nSamples * nFeatures);
  const labels = new Uint32Array(nSamples);
  for (let i = 0; i < nSamples; i++) {
    parseLine(lines[start + i], start + i + 1, nFeatures, features, i, labels);
  }
  return { features, labels, nSamples, nFeatures };
}
