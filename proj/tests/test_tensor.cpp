#include <doctest.h>

#include <limits>

#include "glo/tensor.hpp"

using namespace glo;

TEST_CASE("shape extents and element count") {
  Shape s{2, 3, 4};
  CHECK(s.rank() == 3);
  CHECK(s.numel() == 24);
  CHECK(s.str() == "[2,3,4]");
  CHECK(Shape{}.numel() == 0);
  CHECK_THROWS_AS(Shape({2, 0}), Error);
  CHECK_THROWS_AS(Shape({1, 1, 1, 1, 1}), Error);
}

TEST_CASE("row-major indexing") {
  Tensor t(Shape{2, 3, 4, 5});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  CHECK(t.at(1, 2, 3, 4) == static_cast<float>(((1 * 3 + 2) * 4 + 3) * 5 + 4));
  Tensor m(Shape{3, 4});
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<float>(i);
  CHECK(m.at(2, 1) == 9.0f);
}

TEST_CASE("buffer size must fit the shape") {
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<float>(3)), Error);
  CHECK_NOTHROW(Tensor(Shape{2, 2}, std::vector<float>(4)));
}

TEST_CASE("reshape keeps the buffer") {
  Tensor t(Shape{2, 6}, std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  Tensor r = t.reshaped(Shape{3, 4});
  CHECK(r.vec() == t.vec());
  CHECK_THROWS_AS(t.reshaped(Shape{5}), Error);
}

TEST_CASE("slices along the leading axis") {
  Tensor t(Shape{3, 2}, std::vector<float>{0, 1, 2, 3, 4, 5});
  CHECK(t.slice(1).shape() == Shape{2});
  CHECK(t.slice(1).vec() == std::vector<float>{2, 3});
  CHECK(t.slice(1, 3).shape() == Shape{2, 2});
  CHECK(t.slice(1, 3).vec() == std::vector<float>{2, 3, 4, 5});
  t.set_slice(0, Tensor(Shape{2}, std::vector<float>{9, 8}));
  CHECK(t.vec() == std::vector<float>{9, 8, 2, 3, 4, 5});
  CHECK_THROWS_AS(t.slice(3), Error);
  CHECK_THROWS_AS(t.set_slice(0, Tensor(Shape{3})), Error);
}

TEST_CASE("gather rows") {
  Tensor t(Shape{3, 2}, std::vector<float>{0, 1, 2, 3, 4, 5});
  const std::vector<std::size_t> idx{2, 0};
  Tensor g = gather_rows(t, idx);
  CHECK(g.vec() == std::vector<float>{4, 5, 0, 1});
  const std::vector<std::size_t> bad{3};
  CHECK_THROWS_AS(gather_rows(t, bad), Error);
}

TEST_CASE("cast between precisions") {
  Tensor t(Shape{2}, std::vector<float>{0.5f, -1.25f});
  TensorD d = t.cast<double>();
  CHECK(d[0] == 0.5);
  CHECK(d.cast<float>() == t);
}

TEST_CASE("finiteness check") {
  Tensor t(Shape{2}, 1.0f);
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<float>::infinity();
  CHECK_FALSE(t.all_finite());
}
