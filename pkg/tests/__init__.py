# Tests package for dstbcsim
