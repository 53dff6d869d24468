export { DecodeStepError, type ErrorCode } from "./errors.js";
export {
  batchDecode,
  decodeStep,
  sampleIndex,
  type BatchItem,
  type DecodeStepResult,
  type DecoderKind,
  type FlatDecodeRequest,
} from "./decode.js";
export {
  greedyDecode,
  makeWeights,
  nucleusIndices,
  restrictedSoftmax,
  softmaxDecode,
  sparsemaxDecode,
  sparsemaxThreshold,
  topkIndices,
  type WeightSchemeSpec,
} from "./decoders.js";
export { PhiloxStream } from "./philox.js";
export {
  readLogitsBinary,
  readReportJsonl,
  writeLogitsBinary,
  writeLogitsJsonl,
  type ReportRecord,
} from "./logitsIo.js";
