/**
 * Monotone ticket counter for discarding stale responses.
 *
 * Each request takes a ticket; a response is applied only when no newer
 * request was issued meanwhile. Out-of-order arrivals from superseded
 * requests are dropped instead of overwriting fresher state.
 */
export class LatestGate {
  private generation = 0;

  next(): number {
    return ++this.generation;
  }

  isCurrent(ticket: number): boolean {
    return ticket === this.generation;
  }
}
