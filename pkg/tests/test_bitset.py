import random
import unittest

from mabfws.bfws_lib import bitset


class BitsetTest(unittest.TestCase):
    def setUp(self):
        self.rng = random.Random(0xC0FFEE)

    def test_mask_and_ids_agree(self):
        for _ in range(200):
            ids = sorted(self.rng.sample(range(300), self.rng.randrange(0, 20)))
            mask = bitset.mask_of(ids)
            self.assertEqual(bitset.ids_of(mask), tuple(ids))
            self.assertEqual(bitset.popcount(mask), len(ids))
            for i in ids:
                self.assertTrue(bitset.has_bit(mask, i))

    def test_subset(self):
        self.assertTrue(bitset.is_subset(0b0101, 0b1101))
        self.assertFalse(bitset.is_subset(0b0110, 0b1101))
        self.assertTrue(bitset.is_subset(0, 0))

    def test_rejects_bad_input(self):
        with self.assertRaises(IndexError):
            bitset.mask_of([-1])
        with self.assertRaises(TypeError):
            bitset.mask_of(["3"])
        with self.assertRaises(TypeError):
            list(bitset.iter_bits(1.5))


if __name__ == "__main__":
    unittest.main()
