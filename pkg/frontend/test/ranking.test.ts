import { describe, expect, it } from 'vitest';

import { move, moveDown, moveUp, orderFromRanks, ranksFromOrder } from '../src/ranking.js';

describe('move', () => {
  it('moves an item to a new position', () => {
    expect(move([0, 1, 2], 0, 2)).toEqual([1, 2, 0]);
    expect(move([0, 1, 2], 2, 0)).toEqual([2, 0, 1]);
  });

  it('ignores out-of-range positions', () => {
    expect(move([0, 1, 2], -1, 1)).toEqual([0, 1, 2]);
    expect(move([0, 1, 2], 1, 3)).toEqual([0, 1, 2]);
  });

  it('does not mutate its input', () => {
    const items = [0, 1, 2];
    move(items, 0, 2);
    expect(items).toEqual([0, 1, 2]);
  });
});

describe('keyboard fallback', () => {
  it('moveUp swaps with the previous position', () => {
    expect(moveUp([0, 1, 2], 1)).toEqual([1, 0, 2]);
    expect(moveUp([0, 1, 2], 0)).toEqual([0, 1, 2]);
  });

  it('moveDown swaps with the next position', () => {
    expect(moveDown([0, 1, 2], 1)).toEqual([0, 2, 1]);
    expect(moveDown([0, 1, 2], 2)).toEqual([0, 1, 2]);
  });
});

describe('rank conversion', () => {
  it('display order becomes per-candidate ranks', () => {
    // candidate 2 shown first, then 0, then 1
    expect(ranksFromOrder([2, 0, 1])).toEqual([2, 3, 1]);
  });

  it('round-trips through orderFromRanks', () => {
    const orders = [
      [0, 1, 2],
      [2, 1, 0],
      [1, 2, 0],
      [2, 0, 1],
    ];
    for (const order of orders) {
      expect(orderFromRanks(ranksFromOrder(order))).toEqual(order);
    }
  });

  it('always yields a permutation of 1..n', () => {
    for (const order of [
      [0, 1, 2],
      [1, 0, 2],
      [2, 1, 0],
    ]) {
      const ranking = ranksFromOrder(order);
      expect([...ranking].sort()).toEqual([1, 2, 3]);
    }
  });
});
