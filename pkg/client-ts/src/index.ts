export { Session, RequestFailed } from "./session.js";
export type { SessionOptions } from "./session.js";
export { encode, realText, intText, stringText } from "./encode.js";
export * from "./types.js";
