#include <nelloc/codec.hpp>

int main() {
  nelloc::ModelSpec spec{nelloc::Variant::Local, 1, 0, 4, 2, 1};
  const auto model = nelloc::WeightBundle::random(spec, 1, 0.1f);
  const nelloc::Image img(3, 4, 1, 42);
  const auto c = nelloc::compress(img, model, nelloc::CoderKind::Rans);
  return nelloc::decompress(c, model) == img ? 0 : 1;
}
