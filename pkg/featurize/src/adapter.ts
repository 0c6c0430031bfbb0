import {
  ENTITY_TYPES,
  type EntitySpan,
  type EntityType,
  type TaggedDocument,
  type TaggedSentence,
} from "./types.js";

/**
 * Adapters turn one raw input line into a tagged document. The bundled
 * adapter reads pre-tagged JSON; adapters wrapping external taggers plug
 * in the same way (they may be async). A thrown error skips that document
 * and counts it in the run statistics.
 */
export interface TaggerAdapter {
  tag(line: string, lineNumber: number): Promise<TaggedDocument> | TaggedDocument;
}

/** Raised for input lines that do not describe a valid tagged document. */
export class InputError extends Error {}

function fail(lineNumber: number, message: string): never {
  throw new InputError(`line ${lineNumber}: ${message}`);
}

function isEntityType(value: unknown): value is EntityType {
  return (ENTITY_TYPES as readonly unknown[]).includes(value);
}

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((item) => typeof item === "string");
}

function checkSpan(raw: unknown, nTokens: number, lineNumber: number, where: string): EntitySpan {
  if (typeof raw !== "object" || raw === null) {
    fail(lineNumber, `${where}: entity span must be an object`);
  }
  const { start, end, type } = raw as Record<string, unknown>;
  if (!Number.isInteger(start) || !Number.isInteger(end)) {
    fail(lineNumber, `${where}: span start/end must be integers`);
  }
  if ((start as number) < 0 || (start as number) >= (end as number) || (end as number) > nTokens) {
    fail(lineNumber, `${where}: span [${start}, ${end}) out of range for ${nTokens} tokens`);
  }
  if (!isEntityType(type)) {
    fail(lineNumber, `${where}: entity type must be one of ${ENTITY_TYPES.join(", ")}`);
  }
  return { start: start as number, end: end as number, type };
}

function checkSentence(raw: unknown, lineNumber: number, index: number): TaggedSentence {
  const where = `sentence ${index}`;
  if (typeof raw !== "object" || raw === null) {
    fail(lineNumber, `${where}: must be an object`);
  }
  const { tokens, pos, entities } = raw as Record<string, unknown>;
  if (!isStringArray(tokens)) {
    fail(lineNumber, `${where}: "tokens" must be an array of strings`);
  }
  if (!isStringArray(pos)) {
    fail(lineNumber, `${where}: "pos" must be an array of strings`);
  }
  if (pos.length !== tokens.length) {
    fail(lineNumber, `${where}: ${tokens.length} tokens but ${pos.length} tags`);
  }
  if (!Array.isArray(entities)) {
    fail(lineNumber, `${where}: "entities" must be an array`);
  }
  const spans = entities.map((e, i) => checkSpan(e, tokens.length, lineNumber, `${where}, entity ${i}`));
  for (let i = 0; i + 1 < spans.length; i++) {
    if (spans[i + 1]!.start < spans[i]!.end) {
      fail(lineNumber, `${where}: entity spans must be ordered and non-overlapping`);
    }
  }
  return { tokens, pos, entities: spans };
}

/**
 * The identity adapter for input that is already tagged: one JSON object
 * per line, {"id", "sentences": [{"tokens", "pos", "entities"}]} with
 * entity spans as {"start", "end", "type"} half-open token ranges.
 */
export const pretaggedAdapter: TaggerAdapter = {
  tag(line: string, lineNumber: number): TaggedDocument {
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch (err) {
      fail(lineNumber, `not valid JSON (${err instanceof Error ? err.message : String(err)})`);
    }
    if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
      fail(lineNumber, "document must be a JSON object");
    }
    const { id, sentences } = raw as Record<string, unknown>;
    if (typeof id !== "string" || id.length === 0) {
      fail(lineNumber, `"id" must be a non-empty string`);
    }
    if (!Array.isArray(sentences)) {
      fail(lineNumber, `"sentences" must be an array`);
    }
    return { id, sentences: sentences.map((s, i) => checkSentence(s, lineNumber, i)) };
  },
};
