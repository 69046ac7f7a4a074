/**
 * Ordering helpers for the rank-by-usefulness list.
 *
 * The UI keeps a display `order` (candidate indices, best first) that the
 * user manipulates by dragging or with the keyboard; `ranksFromOrder` turns
 * it into the wire format, where `ranking[i]` is the rank of candidate `i`.
 */

export function move<T>(items: T[], from: number, to: number): T[] {
  if (from < 0 || from >= items.length || to < 0 || to >= items.length) {
    return [...items];
  }
  const next = [...items];
  const [item] = next.splice(from, 1);
  next.splice(to, 0, item);
  return next;
}

export function moveUp<T>(items: T[], index: number): T[] {
  return index <= 0 ? [...items] : move(items, index, index - 1);
}

export function moveDown<T>(items: T[], index: number): T[] {
  return index >= items.length - 1 ? [...items] : move(items, index, index + 1);
}

export function ranksFromOrder(order: number[]): number[] {
  const ranking = new Array<number>(order.length).fill(0);
  order.forEach((candidateIndex, position) => {
    ranking[candidateIndex] = position + 1;
  });
  return ranking;
}

export function orderFromRanks(ranking: number[]): number[] {
  const order = new Array<number>(ranking.length).fill(0);
  ranking.forEach((rank, candidateIndex) => {
    order[rank - 1] = candidateIndex;
  });
  return order;
}
