import type { FetchLike, WireResponse } from "../src/client.js";

/** A canned response carrying raw body text, like the service would send. */
export function textResponse(raw: string, status = 200): WireResponse {
  return { status, text: async () => raw };
}

export function jsonResponse(payload: unknown, status = 200): WireResponse {
  return textResponse(JSON.stringify(payload), status);
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

/** A promise whose settlement the test controls, for out-of-order replies. */
export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export interface RecordedCall {
  url: string;
  init?: { method?: string; headers?: Record<string, string>; body?: string };
}

export interface RoutedFetch extends FetchLike {
  calls: RecordedCall[];
}

/** Fetch double that records calls and delegates to a routing function. */
export function routedFetch(
  route: (url: string, call: RecordedCall) => WireResponse | Promise<WireResponse>,
): RoutedFetch {
  const calls: RecordedCall[] = [];
  const fn = ((url, init) => {
    const call = { url, init };
    calls.push(call);
    return Promise.resolve(route(url, call));
  }) as RoutedFetch;
  fn.calls = calls;
  return fn;
}

/** Wait until the assertion stops throwing (bounded polling). */
export async function eventually(assertion: () => void, tries = 50): Promise<void> {
  for (let i = 0; ; i++) {
    try {
      assertion();
      return;
    } catch (err) {
      if (i >= tries) throw err;
      await new Promise((res) => setTimeout(res, 2));
    }
  }
}
