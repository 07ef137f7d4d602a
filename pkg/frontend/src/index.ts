/** Public API surface. */

export {
  ExportError,
  IoError,
  MissingFileError,
  ShapeMismatchError,
  UnknownLayerError,
  ValidationError,
} from "./errors";
export {
  FORMAT_VERSION,
  LABEL_HEADER_BYTES,
  LABEL_MAGIC,
  TRACE_HEADER_BYTES,
  TRACE_MAGIC,
  encodeLabels,
  encodeTraces,
  writeLabelFile,
  writeTraceFile,
} from "./format";
export { Dataset, loadDataset } from "./dataset";
export {
  TapModel,
  buildTapModel,
  diskSaveHandler,
  flattenActivation,
  loadModel,
  resolveModelJson,
} from "./model";
export { DEFAULT_BATCH_SIZE, ExportResult, ExportSpec, exportTraces } from "./export";
export { E_IO, E_OK, E_VALIDATION, exitCodeFor, main } from "./cli";
