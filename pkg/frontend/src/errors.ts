/** Error taxonomy mirroring the consumer toolkit's exit-code conventions. */

/** Base class for every exporter error. */
export class ExportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** A named input file or directory does not exist. Exit code 2. */
export class MissingFileError extends ExportError {}

/** Reading or writing a file failed. Exit code 2. */
export class IoError extends ExportError {}

/** A tap name does not match any layer in the model. Exit code 3. */
export class UnknownLayerError extends ExportError {}

/** Row counts, widths, or label values do not line up. Exit code 3. */
export class ShapeMismatchError extends ExportError {}

/** Malformed dataset or configuration input. Exit code 3. */
export class ValidationError extends ExportError {}
