import type { TaggerAdapter } from "./adapter.js";
import { featurizeDocument } from "./extract.js";
import { renderDocumentLine } from "./render.js";
import type { CorpusStats } from "./types.js";

/**
 * Order-preserving parallel map: up to `concurrency` items are in flight
 * at once, and results come back in input order regardless of completion
 * order.
 */
export async function mapInOrder<T, U>(
  items: readonly T[],
  fn: (item: T, index: number) => Promise<U> | U,
  concurrency: number,
): Promise<U[]> {
  if (!Number.isInteger(concurrency) || concurrency < 1) {
    throw new RangeError(`concurrency must be a positive integer, got ${concurrency}`);
  }
  const results = new Array<U>(items.length);
  let next = 0;
  async function worker(): Promise<void> {
    while (true) {
      const i = next;
      next += 1;
      if (i >= items.length) {
        return;
      }
      results[i] = await fn(items[i]!, i);
    }
  }
  const workers = Array.from({ length: Math.min(concurrency, items.length) }, () => worker());
  await Promise.all(workers);
  return results;
}

export interface FeaturizeOptions {
  /** Documents processed in parallel (default 8). */
  concurrency?: number;
  /** Receives one message per skipped document (default: silent). */
  onWarning?: (message: string) => void;
}

export interface FeaturizeResult {
  /** Canonical corpus lines, one per surviving document, in input order. */
  lines: string[];
  stats: CorpusStats;
}

/**
 * Featurize input lines (one tagged document per line) into corpus lines.
 *
 * Blank lines are ignored. A document the adapter rejects is skipped and
 * counted as failed; a valid document with no qualifying sentence is
 * dropped and counted. Output order always matches input order.
 */
export async function featurizeLines(
  inputLines: readonly string[],
  adapter: TaggerAdapter,
  options: FeaturizeOptions = {},
): Promise<FeaturizeResult> {
  const { concurrency = 8, onWarning = () => {} } = options;

  interface PerDocument {
    line: string | null;
    blank: boolean;
    failed: boolean;
    read: number;
    written: number;
  }

  const perDocument = await mapInOrder(
    inputLines,
    async (text, index): Promise<PerDocument> => {
      if (text.trim().length === 0) {
        return { line: null, blank: true, failed: false, read: 0, written: 0 };
      }
      let tagged;
      try {
        tagged = await adapter.tag(text, index + 1);
      } catch (err) {
        onWarning(err instanceof Error ? err.message : String(err));
        return { line: null, blank: false, failed: true, read: 0, written: 0 };
      }
      const result = featurizeDocument(tagged);
      return {
        line: result.doc !== null ? renderDocumentLine(result.doc) : null,
        blank: false,
        failed: false,
        read: result.sentencesRead,
        written: result.sentencesWritten,
      };
    },
    concurrency,
  );

  const stats: CorpusStats = {
    documents_read: 0,
    documents_written: 0,
    documents_failed: 0,
    documents_dropped: 0,
    sentences_read: 0,
    sentences_written: 0,
    sentences_dropped: 0,
  };
  const lines: string[] = [];
  for (const doc of perDocument) {
    if (doc.blank) {
      continue;
    }
    stats.documents_read += 1;
    stats.sentences_read += doc.read;
    stats.sentences_written += doc.written;
    if (doc.failed) {
      stats.documents_failed += 1;
    } else if (doc.line === null) {
      stats.documents_dropped += 1;
    } else {
      stats.documents_written += 1;
      lines.push(doc.line);
    }
  }
  stats.sentences_dropped = stats.sentences_read - stats.sentences_written;
  return { lines, stats };
}
