/** Boundary validation failures carry a stable machine-readable code. */

export type ErrorCode =
  | "EmptyScores"
  | "NonFiniteEntry"
  | "UnknownDecoder"
  | "NonPositiveLambda"
  | "KOutOfRange"
  | "POutOfRange"
  | "OutOfRange"
  | "InvalidSchemeParam"
  | "InconsistentVocabSize"
  | "BadStream";

export class DecodeStepError extends Error {
  readonly code: ErrorCode;

  constructor(code: ErrorCode, message: string) {
    super(message);
    this.name = "DecodeStepError";
    this.code = code;
  }
}
